from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from homoflow.errors import DomainError, ParamError
from homoflow.expansion_classes import Expansion
from homoflow.qop_lab import (
    FTMode,
    GnMode,
    Hypergraph,
    QopParams,
    bit_ranges,
    build_from_bits,
    build_girth4_hypergraph,
    contains_c3,
    expansion_counts,
    expected_embeddings,
    girth_at_least_four,
    mcdiarmid_bound,
    mode_valid,
    plant_hypergraph_digraph,
    qop_hypergraph_check,
    run_qop_experiment,
    sample_structure,
    sampler_name,
    sensitivity_bound,
    single_edge_sensitivity,
    small_structure,
)
from homoflow.structures import ClassSpec, cycle, digraph, linear_tournament, validate_structure

from oracles import brute_embeddings


def _params(sampler, n, k, m=1, M=2, a=None):
    return {"n": n, "k": k, "m": m, "M": M, "a": a or (1,) * k}


def test_sampler_aliases():
    assert sampler_name("D-Omega") == "domega"
    assert sampler_name("HatTRandom") == "hatt"
    with pytest.raises(ParamError):
        sampler_name("nope")


def test_param_validation():
    with pytest.raises(ParamError):
        QopParams("sr", M=3)
    with pytest.raises(ParamError):
        QopParams("domega", k=2, a=(2, 1), m=1)
    with pytest.raises(ParamError):
        QopParams(D=0.5, epsilon=0.1)
    assert QopParams(epsilon=0.2).D == 0.1


@pytest.mark.parametrize("sampler,params", [
    ("domega", {"n": 4, "m": 2}),
    ("dn", {"n": 3, "m": 2}),
    ("hatt", {"n": 5}),
    ("sr", {"n": 3, "M": 2}),
    ("sr", {"n": 2, "M": 4}),
])
def test_samples_lie_in_their_age(sampler, params):
    spec = {"domega": ClassSpec("DomegaAge"), "dn": ClassSpec("DnAge", param=params["n"]),
            "hatt": ClassSpec("HatTAge"), "sr": ClassSpec("SemiGenericAge")}[sampler]
    for seed in range(5):
        s = sample_structure(sampler, params, seed)
        assert validate_structure(s.structure.reduct(), spec)
        assert s.structure == build_from_bits(sampler, params, s.bits)
        assert len(s.bits) == len(bit_ranges(sampler, params))


def test_sampling_is_seeded():
    a = sample_structure("hatt", {"n": 8}, 3)
    b = sample_structure("hatt", {"n": 8}, 3)
    assert a.bits == b.bits and a.structure == b.structure


@pytest.mark.parametrize("sampler,params,h_sizes", [
    ("domega", {"n": 3, "k": 2, "m": 2}, (1, 2)),
    ("domega", {"n": 3, "k": 3, "m": 1}, (1, 1, 1)),
    ("dn", {"n": 3, "k": 2, "m": 2}, (2, 1)),
    ("hatt", {"n": 3, "k": 2}, None),
    ("hatt", {"n": 4, "k": 3}, None),
    ("sr", {"n": 3, "k": 2, "M": 2}, None),
])
def test_expected_embeddings_by_enumeration(sampler, params, h_sizes):
    """Average N_emb over every value of the random variables, counted by brute force."""
    p = QopParams(sampler, n=params["n"], k=params["k"], m=params.get("m", 1), M=params.get("M", 2),
                  a=h_sizes, seed=4)
    h = small_structure(p)
    full = _params(sampler, p.n, p.k, p.m, p.M, p.a)
    total = 0
    count = 0
    for bits in itertools.product(*[range(r) for r in bit_ranges(sampler, full)]):
        total += len(brute_embeddings(h, build_from_bits(sampler, full, bits)))
        count += 1
    assert Fraction(total, count) == expected_embeddings(sampler, full, p.a)


CASES = []
for _n in range(2, 6):
    for _k in range(2, min(_n, 3) + 1):
        CASES.append(("domega", _n, _k, 2, 2))
        CASES.append(("dn", _n, _k, 2, 2))
        CASES.append(("hatt", _n, _k, 1, 2))
        if _n <= 4:
            CASES.append(("sr", _n, _k, 1, 2))


@pytest.mark.parametrize("sampler,n,k,m,M", CASES)
def test_single_variable_changes_respect_bound(sampler, n, k, m, M):
    for seed in range(3):
        a = (1,) * (k - 1) + (min(2, m),)
        p = QopParams(sampler, n=n, k=k, m=m, M=M, a=a, seed=seed)
        h = small_structure(p)
        params = _params(sampler, n, k, m, M, p.a)
        bound = sensitivity_bound(sampler, params, p.a)
        sample = sample_structure(sampler, params, seed + 100)
        ranges = bit_ranges(sampler, params)
        for flip, r in enumerate(ranges):
            for value in range(r):
                assert abs(single_edge_sensitivity(sample, h, flip, value)) <= bound


def test_sensitivity_flip_out_of_range():
    sample = sample_structure("hatt", {"n": 3}, 0)
    with pytest.raises(ParamError):
        single_edge_sensitivity(sample, linear_tournament(2), 99)


def test_mcdiarmid_bound():
    assert mcdiarmid_bound([1.0] * 4, 1.0) == pytest.approx(2 * math.exp(-0.5))
    with pytest.raises(DomainError):
        mcdiarmid_bound([], 0.1)


def test_expansion_counts_by_hand():
    h = digraph(2, [(0, 1)])
    exps = [Expansion(h, (0, 1)), Expansion(h, (1, 0))]
    emb = np.array([[0, 1], [1, 2], [0, 2]])
    ranks = np.array([2, 0, 1])
    # orders: 1 < 2 < 0; (0,1) has 0 above 1, (1,2) agrees, (0,2) has 0 above 2
    assert expansion_counts(exps, emb, ranks, None) == [1, 2]


def test_experiment_is_reproducible():
    p = QopParams("hatt", n=12, k=2, trials=5, seed=9, g_expansions=3)
    a, b = run_qop_experiment(p).to_json(), run_qop_experiment(p).to_json()
    assert a == b
    # two columns: 2! column orders times two twin orders per column
    assert a["rho"] == "1/8"


def test_experiment_rejects_foreign_h():
    with pytest.raises(DomainError):
        run_qop_experiment(QopParams("domega", n=5, k=2, trials=1), h=digraph(3, [(0, 1)]))


def test_experiment_csv_rows():
    rep = run_qop_experiment(QopParams("domega", n=8, k=2, trials=3, seed=1, g_expansions=2))
    rows = rep.csv_rows()
    assert rows[0] == ["trial", "n_emb", "worst_n_exp", "max_deviation"]
    assert len(rows) == 4


def test_girth_checker():
    good = Hypergraph(6, 3, [{0, 1, 2}, {2, 3, 4}])
    assert girth_at_least_four(good)
    assert not girth_at_least_four(Hypergraph(6, 3, [{0, 1, 2}, {1, 2, 3}]))
    # three edges meeting pairwise in three different points: a Berge triangle
    assert not girth_at_least_four(Hypergraph(6, 3, [{0, 1, 3}, {1, 2, 4}, {2, 0, 5}]))


def test_built_hypergraph_has_girth_four():
    hg = build_girth4_hypergraph(30, 3, seed=2)
    assert hg.edges and girth_at_least_four(hg)


def test_planted_ft_digraph_is_c3_free():
    hg = build_girth4_hypergraph(40, 3, seed=5)
    g, copies = plant_hypergraph_digraph(hg, linear_tournament(3), FTMode((cycle(3),)), seed=5)
    assert not contains_c3(g)
    assert mode_valid(g, FTMode((cycle(3),)))
    assert len(copies) == len(hg.edges)


def test_planted_gn_digraph_has_small_independent_sets():
    hg = build_girth4_hypergraph(16, 3, seed=1)
    g, _ = plant_hypergraph_digraph(hg, linear_tournament(3), GnMode(2), seed=1)
    # every pair outside a hyperedge is an arc, inside it is H's arc
    assert len(g.arcs) == 16 * 15 // 2
    assert mode_valid(g, GnMode(2))


def test_hypergraph_check_counts_hyperedge_embeddings():
    hg = build_girth4_hypergraph(30, 3, seed=3)
    h = linear_tournament(3)
    g, _ = plant_hypergraph_digraph(hg, h, FTMode((cycle(3),)), seed=3)
    rep = qop_hypergraph_check(h, g, hg, g_expansions=4, seed=3)
    assert rep.n_emb == len(hg.edges)
    assert rep.L == 1
    assert rep.rho == Fraction(1, 6)
    assert all(sum(row) == rep.n_emb for row in rep.counts)
