from __future__ import annotations

import copy
import random
from fractions import Fraction

import pytest

from homoflow import lp
from homoflow.ages import iso_types
from homoflow.errors import DomainError, StepError
from homoflow.fragments import BUILTINS, builtin
from homoflow.random_expansion_solver import (
    Certificate,
    Fragment,
    build_constraints,
    check_cofinal_isomorphism,
    check_density_criterion,
    check_measure,
    hand_qhat_certificate,
    replay_certificate,
    solve_feasibility,
    uniform_weights,
    uniqueness_probe,
    verify_certificate,
)
from homoflow.structures import ClassSpec, digraph, edgeless, linear_tournament

from oracles import brute_lp_max

# the expansion each classical argument drives to zero
FORCED = {"s2-thm51": "C**", "s3-thm51": "C**", "p-sec52": "C1", "p3-thm53": "C1"}


def _combined(cert: Certificate) -> tuple[dict, Fraction]:
    """Add up the recorded equations with their multipliers, without the package's replay."""
    total: dict = {}
    rhs = Fraction(0)
    for step in cert.steps:
        m = Fraction(step["multiplier"])
        for k, c in step["equation"]["terms"].items():
            total[k] = total.get(k, Fraction(0)) + m * Fraction(c)
        rhs += m * Fraction(step["equation"]["rhs"])
    return {k: c for k, c in total.items() if c}, rhs


def _sound(cert: Certificate) -> bool:
    terms, rhs = _combined(cert)
    if any(c < 0 for c in terms.values()):
        return False
    if cert.conclusion["type"] == "contradiction":
        return rhs < 0
    return rhs == 0 and terms.get(str(cert.conclusion["target"]), 0) > 0


@pytest.mark.parametrize("name", sorted(FORCED))
def test_classical_fragments_force_a_zero(name):
    spec, frag = builtin(name)
    system = build_constraints(spec, frag)
    result = solve_feasibility(system)
    assert not result.feasible
    cert = result.certificate
    assert cert.conclusion["type"] == "forced_zero"
    si, expected = frag.named_expansions[FORCED[name]]
    assert cert.conclusion["target"] == system.var_of(si, expected) == system.focus
    assert verify_certificate(cert, spec)
    terms, rhs = _combined(cert)
    assert rhs == 0
    assert all(c >= 0 for c in terms.values())
    assert terms[str(cert.conclusion["target"])] > 0


def test_two_cover_fragment_is_contradictory():
    spec, frag = builtin("qhat-thm54")
    result = solve_feasibility(build_constraints(spec, frag))
    assert not result.feasible
    cert = result.certificate
    assert cert.conclusion["type"] == "contradiction"
    assert verify_certificate(cert, spec)
    terms, rhs = _combined(cert)
    assert rhs < 0 and all(c >= 0 for c in terms.values())


def test_hand_written_two_cover_certificate():
    cert, report = hand_qhat_certificate()
    assert report == {"pinned_A_star": "1/4", "pinned_B_star": "1/6", "extensions_of_A_star": 1}
    out = replay_certificate(cert, ClassSpec.parse("hat-q"))
    assert out["rhs"] == Fraction(-1, 2)
    assert out["terms"] == {}


def test_certificate_json_round_trip():
    spec, frag = builtin("s2-thm51")
    cert = solve_feasibility(build_constraints(spec, frag)).certificate
    again = Certificate.from_json(cert.to_json())
    assert again.dumps() == cert.dumps()
    assert verify_certificate(again, spec)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_tampered_certificates_are_rejected(name):
    spec, frag = builtin(name)
    cert = solve_feasibility(build_constraints(spec, frag)).certificate
    data = cert.to_json()

    # a changed multiplier may or may not spoil the combination; replay must agree with the arithmetic
    for pos in range(len(data["steps"])):
        bent = copy.deepcopy(data)
        step = bent["steps"][pos]
        step["multiplier"] = str(Fraction(step["multiplier"]) * 2 + 1)
        bent_cert = Certificate.from_json(bent)
        assert verify_certificate(bent_cert, spec) == _sound(bent_cert)

    bent = copy.deepcopy(data)
    eq = bent["steps"][-1]["equation"]
    eq["rhs"] = str(Fraction(eq["rhs"]) + 1)
    with pytest.raises(StepError) as info:
        replay_certificate(Certificate.from_json(bent), spec)
    assert info.value.index == len(bent["steps"]) - 1

    bent = copy.deepcopy(data)
    bent["steps"][0]["kind"] = "Z"
    assert not verify_certificate(Certificate.from_json(bent), spec)


def test_feasible_fragment_gives_checked_measure():
    spec = ClassSpec.parse("tournaments")
    frag = Fragment(list(iso_types(spec, 3)), close=True)
    system = build_constraints(spec, frag)
    result = solve_feasibility(system)
    assert result.feasible
    weights = [result.weights[j] for j in range(len(system.variables))]
    assert check_measure(system, weights) == []
    assert check_measure(system, uniform_weights(system)) == []


def test_fragment_rejects_foreign_structure():
    with pytest.raises(DomainError):
        build_constraints(ClassSpec.parse("tournaments"), Fragment([edgeless(2)]))


DENSITY_PASS = ["d-omega", "d3", "hat-t", "semi-generic", "tournaments", "g2", "ft:c3"]


@pytest.mark.parametrize("tag", DENSITY_PASS)
def test_density_criterion_holds_to_five(tag):
    report = check_density_criterion(ClassSpec.parse(tag), 5)
    assert report.passed and report.checked_pairs > 0


def test_density_criterion_fails_for_posets():
    report = check_density_criterion(ClassSpec.parse("poset"), 3)
    assert not report.passed
    ce = report.counterexample
    assert ce["first"]["relative_count"] != ce["second"]["relative_count"]


def test_uniqueness_probe_pins_lower_levels():
    for tag, bound in (("edgeless", 4), ("d-omega", 3)):
        spec = ClassSpec.parse(tag)
        probe = uniqueness_probe(build_constraints(spec, Fragment(list(iso_types(spec, bound)), close=True)))
        assert probe["feasible"] and probe["uniform_feasible"] and probe["unique_on_levels"]


def test_uniqueness_probe_leaves_tournament_arcs_free():
    # a finite fragment never pins the two orders of an arc; that needs the limit argument
    spec = ClassSpec.parse("tournaments")
    probe = uniqueness_probe(build_constraints(spec, Fragment(list(iso_types(spec, 3)), close=True)))
    assert probe["levels"]["1"]["pinned_to_uniform"] == 1
    assert probe["levels"]["2"]["pinned"] == 0


@pytest.mark.slow
def test_uniqueness_probe_tournaments_four():
    spec = ClassSpec.parse("tournaments")
    probe = uniqueness_probe(build_constraints(spec, Fragment(list(iso_types(spec, 4)), close=True)))
    assert probe["uniform_feasible"]
    assert probe["levels"]["3"]["orbits"] == 8


def test_cofinal_family_for_edgeless():
    spec = ClassSpec.parse("edgeless")
    assert check_cofinal_isomorphism(spec, lambda b: [edgeless(b)], 4)
    assert not check_cofinal_isomorphism(spec, [edgeless(2)], 4)


def test_cofinal_family_needs_one_expansion_type():
    spec = ClassSpec.parse("tournaments")
    # the cyclic triangle has two non-isomorphic orderings
    assert not check_cofinal_isomorphism(spec, [digraph(3, [(0, 1), (1, 2), (2, 0)])], 3)
    assert not check_cofinal_isomorphism(spec, [linear_tournament(3)], 3)


# the exact simplex ---------------------------------------------------------------

def test_lp_infeasible_gives_farkas_vector():
    A, b = [[1, 1, 0], [1, 1, 0], [0, 1, 1]], [1, 2, 5]
    r = lp.solve(A, b)
    assert r.status == "infeasible"
    yA = [sum(r.dual[i] * A[i][j] for i in range(3)) for j in range(3)]
    assert all(v >= 0 for v in yA)
    assert sum(r.dual[i] * b[i] for i in range(3)) < 0


def test_lp_matches_vertex_enumeration():
    rng = random.Random(11)
    for _ in range(60):
        m, n = rng.randint(1, 3), rng.randint(2, 4)
        A = [[rng.randint(-2, 3) for _ in range(n)] for _ in range(m)]
        # add a bounding row sum(x) + slack = 4 so maxima exist
        A = [row + [0] for row in A] + [[1] * n + [1]]
        x0 = [Fraction(rng.randint(0, 2), 2) for _ in range(n)]
        b = [sum(a * x for a, x in zip(row[:n], x0)) for row in A[:-1]] + [Fraction(4)]
        if sum(x0) > 4:
            continue
        c = [rng.randint(-3, 3) for _ in range(n)] + [0]
        r = lp.solve(A, b, c)
        assert r.status == "optimal"
        assert r.value == brute_lp_max(A, b, c)
        assert all(sum(Fraction(a) * x for a, x in zip(row, r.x)) == bi for row, bi in zip(A, b))
        # dual certificate of optimality
        assert sum(r.dual[i] * b[i] for i in range(len(A))) == r.value
        assert all(sum(r.dual[i] * A[i][j] for i in range(len(A))) >= c[j] for j in range(n + 1))


def test_lp_unbounded():
    assert lp.solve([[1, -1]], [-3], [1, 0]).status == "unbounded"


def test_lp_rank():
    assert lp.rank([[1, 2], [2, 4], [0, 1]]) == 2
    assert lp.rank([[0, 0]]) == 0
