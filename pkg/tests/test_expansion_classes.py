from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest

from homoflow.ages import iso_types
from homoflow.errors import ConfigError, DomainError, EmbeddingError, Unsupported
from homoflow.expansion_classes import (
    Expansion,
    amalgamate_transversal,
    bounded_expansion_property_search,
    closed_form_count,
    complete_fourth_edge,
    count_expansions,
    count_relative_expansions,
    delta,
    delta_inverse,
    enumerate_expansions,
    pullback,
    qhat_expansion_iso,
    qhat_standard,
    relative_count_table,
    validate_expansion,
    verify_expansion_iso,
)
from homoflow.structures import (
    ClassSpec,
    FiniteStructure,
    canonical_form,
    digraph,
    edgeless,
    is_isomorphic,
    iter_embeddings,
    linear_tournament,
    perp_partition,
    validate_structure,
)
from oracles import brute_convex, brute_semi_generic_member

D_OMEGA = ClassSpec.parse("d-omega")
HAT_T = ClassSpec.parse("hat-t")
HAT_Q = ClassSpec.parse("hat-q")
SEMI = ClassSpec.parse("semi-generic")


def candidates(spec: ClassSpec, a: FiniteStructure):
    """Every order / label / R combination of the right shape, before validation."""
    n = a.n
    perms = list(itertools.permutations(range(n)))
    tag = spec.tag
    if tag in ("Tournaments", "GnAge", "FTAge", "EdgelessAge", "QAge", "PosetAge", "DomegaAge"):
        for p in perms:
            yield Expansion(a, p)
    elif tag in ("S2Age", "S3Age"):
        k = 2 if tag == "S2Age" else 3
        for lab in itertools.product(range(k), repeat=n):
            yield Expansion(a, None, lab)
    elif tag == "P3Age":
        for p in perms:
            for lab in itertools.product(range(3), repeat=n):
                yield Expansion(a, p, lab)
    elif tag == "DnAge":
        for p in perms:
            for lab in itertools.product(range(1, spec.param + 1), repeat=n):
                yield Expansion(a, p, lab)
    elif tag in ("HatTAge", "HatQAge"):
        for p in perms:
            for lab in itertools.product((0, 1), repeat=n):
                yield Expansion(a, p, lab)
    elif tag == "SemiGenericAge":
        pairs = [(x, y) for x, y in itertools.permutations(range(n), 2) if a.arc(x, y) or a.arc(y, x)]
        for p in perms:
            for bits in itertools.product((0, 1), repeat=len(pairs)):
                yield Expansion(a, p, None, frozenset(q for q, b in zip(pairs, bits) if b))


ORACLE_SPECS = [
    ("tournaments", 4), ("q", 4), ("poset", 4), ("s2", 4), ("s3", 4), ("p3", 3), ("d-omega", 4), ("d2", 4),
    ("d3", 4), ("hat-t", 4), ("hat-q", 4), ("g2", 4), ("ft:c3", 4), ("edgeless", 4), ("semi-generic", 3),
]


@pytest.mark.parametrize("tag,bound", ORACLE_SPECS)
def test_enumeration_matches_filtered_candidates(tag, bound):
    spec = ClassSpec.parse(tag)
    for n in range(1, bound + 1):
        for a in iso_types(spec, n):
            expected = sorted(e.key for e in candidates(spec, a) if validate_expansion(spec, e))
            got = [e.key for e in enumerate_expansions(spec, a)]
            assert got == expected, (tag, sorted(a.arcs))


@pytest.mark.parametrize("tag,bound", ORACLE_SPECS)
def test_restrictions_stay_valid(tag, bound):
    spec = ClassSpec.parse(tag)
    for n in range(2, bound + 1):
        for b in iso_types(spec, n):
            for e in enumerate_expansions(spec, b):
                for r in range(1, n):
                    for sub in itertools.combinations(range(n), r):
                        a = b.induced(list(sub))
                        assert validate_expansion(spec, pullback(spec, e, sub, a))


class TestCounts:
    def test_linear_orders_of_three(self):
        assert count_expansions(ClassSpec.parse("tournaments"), linear_tournament(3)) == 6

    @pytest.mark.parametrize("k", range(1, 6))
    def test_full_double_cover_has_2k(self, k):
        assert count_expansions(HAT_Q, qhat_standard(k)) == 2 * k

    def test_convex_orders_for_classes_two_and_one(self):
        s = digraph(3, [(0, 2), (1, 2)])
        got = [e.order for e in enumerate_expansions(D_OMEGA, s)]
        expected = [p for p in itertools.permutations(range(3)) if brute_convex(s, p)]
        assert sorted(got) == sorted(expected)
        assert len(got) == 4

    def test_non_convex_order_rejected(self):
        s = digraph(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
        assert not validate_expansion(D_OMEGA, Expansion(s, (0, 2, 1, 3)))
        assert validate_expansion(D_OMEGA, Expansion(s, (2, 3, 1, 0)))

    def test_aux_relation_inside_a_column_rejected(self):
        s = digraph(3, [(0, 2), (1, 2)])
        e = Expansion(s, (0, 1, 2), None, frozenset({(0, 1)}))
        assert not validate_expansion(SEMI, e)

    def test_not_in_age(self):
        with pytest.raises(DomainError):
            enumerate_expansions(ClassSpec.parse("q"), digraph(3, [(0, 1), (1, 2), (2, 0)]))


class TestRelativeCounts:
    def test_point_inside_two_point_column(self):
        a = edgeless(1)
        (e,) = enumerate_expansions(D_OMEGA, a)
        assert count_relative_expansions(D_OMEGA, e, edgeless(2), (0,)) == 2

    def test_hat_t_one_column_in_two(self):
        b = qhat_standard(2).reduct()
        b = digraph(4, b.arcs)
        a = b.induced([0, 1])
        for e in enumerate_expansions(HAT_T, a):
            assert count_relative_expansions(HAT_T, e, b, (0, 1)) == 4
        assert closed_form_count(HAT_T, a, b, (0, 1)) == 4

    def test_semi_generic_singletons(self):
        b = digraph(2, [(0, 1)])
        a = edgeless(1)
        for e in enumerate_expansions(SEMI, a):
            assert count_relative_expansions(SEMI, e, b, (0,)) == 4

    def test_bad_embedding(self):
        (e,) = enumerate_expansions(D_OMEGA, digraph(2, [(0, 1)]))[:1]
        with pytest.raises(EmbeddingError):
            count_relative_expansions(D_OMEGA, e, edgeless(2), (0, 1))


class TestClosedForms:
    def test_d_omega_example(self):
        b = digraph(3, [(0, 2), (1, 2)])
        assert closed_form_count(D_OMEGA, edgeless(1), b, (0,)) == 4

    def test_hat_t_three_columns(self):
        b = digraph(6, qhat_standard(3).arcs)
        a = b.induced([0, 1])
        assert closed_form_count(HAT_T, a, b, (0, 1)) == 24

    def test_unsupported(self):
        with pytest.raises(Unsupported):
            closed_form_count(ClassSpec.parse("poset"), edgeless(1), edgeless(2))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_finite_parts_prefactor(self, n):
        # the number of ways to name the new classes is (n-a)!/(n-b)!
        spec = ClassSpec.parse(f"d{n}")
        for size in range(2, 5):
            for b in iso_types(spec, size):
                for r in range(1, size):
                    for sub in itertools.combinations(range(size), r):
                        a = b.induced(list(sub))
                        want = closed_form_count(spec, a, b, sub)
                        for e in enumerate_expansions(spec, a):
                            assert count_relative_expansions(spec, e, b, sub) == want



@pytest.mark.parametrize("tag", ["tournaments", "d-omega", "d3", "hat-t", "semi-generic", "poset", "comp(q,hat-t)"])
def test_relative_counts_match_direct_pullbacks(tag):
    spec = ClassSpec.parse(tag)
    for size in range(1, 4):
        for b in iso_types(spec, size):
            b_exps = enumerate_expansions(spec, b)
            for emb in itertools.permutations(range(size), max(1, size - 1)):
                a = b.induced(list(emb))
                direct: dict = {}
                for f in b_exps:
                    k = pullback(spec, f, emb, a).key
                    direct[k] = direct.get(k, 0) + 1
                table = relative_count_table(spec, a, b, emb)
                assert len(table) == count_expansions(spec, a)
                for e, count in table:
                    assert count == direct.get(e.key, 0) == count_relative_expansions(spec, e, b, emb)


class TestFourthEdge:
    def test_three_forward(self):
        assert complete_fourth_edge([0, 1], [2, 3], [(0, 2), (0, 3), (1, 2)]) == (1, 3)

    def test_two_forward_one_back(self):
        assert complete_fourth_edge([0, 1], [2, 3], [(0, 2), (0, 3), (2, 1)]) == (3, 1)

    def test_restores_deleted_edge(self):
        cols = ([0, 1], [2, 3])
        pairs = [(x, y) for x in cols[0] for y in cols[1]]
        for bits in itertools.product((0, 1), repeat=4):
            arcs = [(x, y) if b else (y, x) for (x, y), b in zip(pairs, bits)]
            if sum(bits) % 2:
                continue
            for drop in range(4):
                rest = arcs[:drop] + arcs[drop + 1:]
                assert complete_fourth_edge(*cols, rest) == arcs[drop]

    def test_bad_configuration(self):
        with pytest.raises(ConfigError):
            complete_fourth_edge([0, 1], [2, 3], [(0, 2), (0, 3)])


class TestTransversal:
    def test_single_column(self):
        b = amalgamate_transversal(edgeless(2))
        assert b.n == 3 and not b.arcs and validate_structure(b, SEMI)

    def test_two_singletons(self):
        b = amalgamate_transversal(digraph(2, [(0, 1)]), [0, 1])
        assert b.n == 4 and validate_structure(b, SEMI) and b.arc(2, 3)

    def test_general_position(self):
        a = digraph(4, [(0, 2), (0, 3), (2, 1), (3, 1)])
        cols = sorted(map(sorted, perp_partition(a)))
        for seed in range(4):
            for order in ([0, 1], [1, 0]):
                b = amalgamate_transversal(a, order, seed)
                assert b.n == 6 and brute_semi_generic_member(b)
                for i, c in enumerate(order):
                    t = 4 + i
                    perp_with = [v for v in range(4) if not (b.arc(t, v) or b.arc(v, t))]
                    assert perp_with == cols[c]
                first, second = 4, 5
                assert b.arc(first, second)


class TestDelta:
    def test_single_column(self):
        e = enumerate_expansions(HAT_T, edgeless(2))[0]
        assert delta(e).n == 1

    def test_two_point_linear(self):
        t = FiniteStructure(2, frozenset({(0, 1)}), order=(0, 1))
        e = delta_inverse(t)
        assert sorted(e.base.arcs) == [(0, 3), (1, 2), (2, 0), (3, 1)]
        assert e.labels == (0, 1, 0, 1)
        assert validate_expansion(HAT_T, e)

    def test_round_trip(self):
        for n in range(1, 5):
            for t in iso_types(ClassSpec.parse("tournaments"), n):
                for order in itertools.permutations(range(n)):
                    ot = t.with_(order=order)
                    e = delta_inverse(ot)
                    assert validate_expansion(HAT_T, e)
                    back = delta(e)
                    assert is_isomorphic(back, ot)

    def test_needs_full_columns(self):
        e = enumerate_expansions(HAT_T, edgeless(1))[0]
        with pytest.raises(DomainError):
            delta(e)


class TestDoubleCoverIsomorphisms:
    def test_identity(self):
        e = enumerate_expansions(HAT_Q, qhat_standard(3))[0]
        assert qhat_expansion_iso(e, e) == tuple(range(6))

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_all_pairs(self, k):
        exps = enumerate_expansions(HAT_Q, qhat_standard(k))
        for e1, e2 in itertools.product(exps, repeat=2):
            assert verify_expansion_iso(HAT_Q, e1, e2, qhat_expansion_iso(e1, e2))

    def test_composition_carries_first_to_third(self):
        e1, e2, e3 = enumerate_expansions(HAT_Q, qhat_standard(3))[:3]
        p12, p23 = qhat_expansion_iso(e1, e2), qhat_expansion_iso(e2, e3)
        assert verify_expansion_iso(HAT_Q, e1, e3, tuple(p23[p12[v]] for v in range(6)))


class TestExpansionPropertySearch:
    def test_single_point_linear(self):
        b = bounded_expansion_property_search(ClassSpec.parse("tournaments"), edgeless(1), 3)
        assert b.n == 1

    def test_one_column(self):
        # recorded by exhaustive search: the two-point column already works
        b = bounded_expansion_property_search(D_OMEGA, edgeless(2), 5)
        assert canonical_form(b) == canonical_form(edgeless(2))

    def test_tournament_pair(self):
        b = bounded_expansion_property_search(ClassSpec.parse("tournaments"), digraph(2, [(0, 1)]), 4)
        assert b.n >= 2 and next(iter_embeddings(digraph(2, [(0, 1)]), b), None) is not None


def test_total_count_semi_generic():
    # k! * prod a_j! * 2^(k choose 2) expansions for k columns of sizes a_j
    for n in range(1, 5):
        for a in iso_types(SEMI, n):
            cols = perp_partition(a)
            k = len(cols)
            want = math.factorial(k) * math.prod(math.factorial(len(c)) for c in cols) * 2 ** math.comb(k, 2)
            assert count_expansions(SEMI, a) == want
