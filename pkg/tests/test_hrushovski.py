from __future__ import annotations

import itertools

import pytest

from homoflow.errors import DomainError, MalformedStructure, NotFound
from homoflow.hrushovski import (
    PartialIsoSystem,
    extend_partial_isos,
    extend_to_automorphism,
    hrushovski_implies_uniform_ok,
    is_automorphism,
    sample_systems,
    verify_extension,
)
from homoflow.structures import ClassSpec, cycle, digraph, edgeless, linear_tournament

TRANSITIVE_TRIPLE = digraph(3, [(0, 1), (0, 2), (1, 2)])


def _brute_automorphisms(s):
    return [p for p in itertools.permutations(range(s.n))
            if all(s.arc(x, y) == s.arc(p[x], p[y]) for x, y in itertools.permutations(range(s.n), 2))]


def test_system_validation():
    with pytest.raises(MalformedStructure):
        PartialIsoSystem(linear_tournament(2), [{0: 1, 1: 0}])  # reverses the arc
    with pytest.raises(MalformedStructure):
        PartialIsoSystem(edgeless(2), [{0: 1, 1: 1}])
    with pytest.raises(MalformedStructure):
        PartialIsoSystem(edgeless(2), [{0: 5}])


def test_system_json_round_trip():
    sys = PartialIsoSystem(cycle(3), [{0: 1, 1: 2}, {2: 2}])
    again = PartialIsoSystem.from_json(sys.to_json())
    assert again.maps == sys.maps and again.ambient == sys.ambient


def test_extend_to_automorphism_agrees_with_brute_force():
    for s in (cycle(3), edgeless(3), TRANSITIVE_TRIPLE, digraph(4, [(0, 1), (2, 3)])):
        autos = _brute_automorphisms(s)
        for x, y in itertools.product(range(s.n), repeat=2):
            got = extend_to_automorphism(s, {x: y})
            expected = [p for p in autos if p[x] == y]
            if expected:
                assert got == min(expected) and is_automorphism(s, got)
            else:
                assert got is None


def test_identity_maps_extend_inside_the_ambient():
    sys = PartialIsoSystem(TRANSITIVE_TRIPLE, [{0: 0, 1: 1}, {}])
    w = extend_partial_isos(sys, ClassSpec.parse("tournaments"), 3)
    assert w.structure.n == 3
    assert verify_extension(sys, w)


def test_edgeless_maps_extend():
    sys = PartialIsoSystem(edgeless(3), [{0: 1, 1: 2}, {2: 0}])
    w = extend_partial_isos(sys, ClassSpec.parse("edgeless"), 4)
    assert w.structure.n == 3 and verify_extension(sys, w)


def test_cyclic_triangle_rotation_extends_in_tournaments():
    # the arc 0 -> 1 sent to 1 -> 2: needs a structure where those arcs are swapped
    sys = PartialIsoSystem(linear_tournament(2), [{0: 1}])
    w = extend_partial_isos(sys, ClassSpec.parse("tournaments"), 4)
    assert verify_extension(sys, w)
    assert w.structure.n == 3


def test_two_sector_obstruction_not_found():
    # fix x and move one out-neighbour onto another: out-neighbourhoods are linear
    sys = PartialIsoSystem(TRANSITIVE_TRIPLE, [{0: 0, 1: 2}])
    with pytest.raises(NotFound):
        extend_partial_isos(sys, ClassSpec.parse("s2"), 7)


def test_linear_order_obstruction_not_found():
    sys = PartialIsoSystem(digraph(2, [(0, 1)]), [{0: 1}])
    with pytest.raises(NotFound):
        extend_partial_isos(sys, ClassSpec.parse("q"), 6)


def test_ambient_outside_class_is_rejected():
    with pytest.raises(DomainError):
        extend_partial_isos(PartialIsoSystem(cycle(3), []), ClassSpec.parse("q"), 4)
    with pytest.raises(DomainError):
        extend_partial_isos(PartialIsoSystem(edgeless(3), []), ClassSpec.parse("edgeless"), 2)


def test_verify_extension_catches_bad_witness():
    sys = PartialIsoSystem(edgeless(2), [{0: 1}])
    w = extend_partial_isos(sys, ClassSpec.parse("edgeless"), 3)
    w.automorphisms = [tuple(range(w.structure.n))]
    assert not verify_extension(sys, w)


def test_search_is_deterministic():
    sys = PartialIsoSystem(linear_tournament(2), [{0: 1}, {1: 0}])
    a = extend_partial_isos(sys, ClassSpec.parse("tournaments"), 5).to_json()
    b = extend_partial_isos(sys, ClassSpec.parse("tournaments"), 5).to_json()
    assert a == b


def test_sampled_systems_are_partial_isomorphisms():
    systems = sample_systems(ClassSpec.parse("tournaments"), 4)
    assert systems
    for sys in systems:
        (m,) = sys.maps
        assert 1 <= len(m) <= 2 and sys.ambient.n <= 3


def test_edgeless_consistency_report():
    rep = hrushovski_implies_uniform_ok(ClassSpec.parse("edgeless"), 5)
    assert rep["extension_all_found"] and rep["density_passed"] and rep["consistent"]
    assert rep["extended"] == rep["systems"] == 24


def test_two_sector_consistency_report():
    rep = hrushovski_implies_uniform_ok(ClassSpec.parse("s2"), 5)
    assert not rep["extension_all_found"]
    assert not rep["density_passed"]
    assert rep["consistent"] and not rep["red_flag"]
