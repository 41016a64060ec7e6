"""Quantitative expansion property experiments: random samplers, embedding counts and concentration bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, ParamError, Unsupported
from .expansion_classes import Expansion, delta_inverse, enumerate_expansions
from .structures import (
    ClassSpec,
    FiniteStructure,
    automorphisms,
    column_index,
    digraph,
    has_independent_set,
    iter_embeddings,
    validate_structure,
)

SAMPLERS = ("domega", "dn", "hatt", "sr")
_SAMPLER_ALIASES = {
    "domega": "domega", "d-omega": "domega", "domegarandom": "domega",
    "dn": "dn", "dnrandom": "dn",
    "hatt": "hatt", "hat-t": "hatt", "hattrandom": "hatt",
    "sr": "sr", "srrandom": "sr", "s-r": "sr",
}


def sampler_name(text: str) -> str:
    try:
        return _SAMPLER_ALIASES[text.lower()]
    except KeyError as exc:
        raise ParamError(f"unknown sampler {text!r}; choose from {SAMPLERS}") from exc


def falling(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    return math.perm(n, k)


def mcdiarmid_bound(a: Sequence[float], epsilon: float) -> float:
    """2 exp(-2 eps^2 / sum a_i^2), reported unclamped."""
    a = list(a)
    if not a:
        raise DomainError("need at least one bounded difference")
    if any(x <= 0 for x in a) or epsilon <= 0:
        raise DomainError("bounded differences and epsilon must be positive")
    return 2.0 * math.exp(-2.0 * epsilon * epsilon / sum(x * x for x in a))


@dataclass
class QopParams:
    sampler: str = "domega"
    epsilon: float = 0.1
    D: float | None = None
    n: int = 20
    k: int = 2
    m: int = 1
    M: int = 2
    a: tuple | None = None
    trials: int = 50
    seed: int = 0
    g_expansions: int = 50

    def __post_init__(self):
        self.sampler = sampler_name(self.sampler)
        if self.D is None:
            self.D = self.epsilon / 2
        if not (0 < self.D <= self.epsilon):
            raise ParamError("need 0 < D <= epsilon")
        if self.n < 1 or self.k < 1 or self.m < 1 or self.trials < 1:
            raise ParamError("sizes and trial count must be positive")
        if self.n < self.k:
            raise ParamError("n must be at least k")
        if self.sampler == "sr" and (self.M < 2 or self.M % 2):
            raise ParamError("the S_R sampler needs an even column size M >= 2")
        if self.a is None:
            self.a = (1,) * self.k
        self.a = tuple(int(x) for x in self.a)
        if len(self.a) != self.k or any(x < 1 for x in self.a):
            raise ParamError("a must list k positive class sizes")
        if self.sampler in ("domega", "dn") and max(self.a) > self.m:
            raise ParamError("class sizes of H cannot exceed m")

    def to_json(self) -> dict:
        return {"sampler": self.sampler, "epsilon": self.epsilon, "D": self.D, "n": self.n, "k": self.k,
                "m": self.m, "M": self.M, "a": list(self.a), "trials": self.trials, "seed": self.seed,
                "g_expansions": self.g_expansions}


# samplers ----------------------------------------------------------------------

@dataclass
class RandomSample:
    """A sampled structure together with the random variables that produced it."""

    sampler: str
    params: dict
    bits: list
    structure: FiniteStructure
    columns: list = field(default_factory=list)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def _multipartite_bits(n: int, m: int) -> list[tuple[int, int]]:
    """Cross pairs (x, y), x < y, of n classes of size m (vertex c*m + i lies in class c)."""
    return [(x, y) for x in range(n * m) for y in range(x + 1, n * m) if x // m != y // m]


def _sr_choices(M: int) -> list[tuple[frozenset, frozenset]]:
    """Half/half partition pairs (A, B) up to swapping both for their complements (A holds point 0)."""
    half = M // 2
    out = []
    for A in itertools.combinations(range(M), half):
        if 0 not in A:
            continue
        for B in itertools.combinations(range(M), half):
            out.append((frozenset(A), frozenset(B)))
    return out


def build_from_bits(sampler: str, params: dict, bits: Sequence[int]) -> FiniteStructure:
    """Deterministic part of each sampler: the structure determined by its random variables."""
    if sampler in ("domega", "dn"):
        n, m = params["n"], params["m"]
        pairs = _multipartite_bits(n, m)
        arcs = [(x, y) if b else (y, x) for (x, y), b in zip(pairs, bits)]
        return FiniteStructure(n * m, frozenset(arcs))
    if sampler == "hatt":
        n = params["n"]
        pairs = list(itertools.combinations(range(n), 2))
        t = digraph(n, [(i, j) if b else (j, i) for (i, j), b in zip(pairs, bits)])
        return delta_inverse(t).base
    if sampler == "sr":
        n, M = params["n"], params["M"]
        choices = _sr_choices(M)
        arcs, R = [], []
        for (i, j), b in zip(itertools.combinations(range(n), 2), bits):
            A, B = choices[b]
            for x in range(M):
                for y in range(M):
                    gx, gy = i * M + x, j * M + y
                    if (x in A) != (y in B):
                        arcs.append((gx, gy))
                    else:
                        arcs.append((gy, gx))
                    if y in B:
                        R.append((gx, gy))
                    if x in A:
                        R.append((gy, gx))
        return FiniteStructure(n * M, frozenset(arcs), R=frozenset(R))
    raise ParamError(f"unknown sampler {sampler!r}")


def bit_ranges(sampler: str, params: dict) -> list[int]:
    """Number of values each random variable takes."""
    if sampler in ("domega", "dn"):
        return [2] * len(_multipartite_bits(params["n"], params["m"]))
    if sampler == "hatt":
        return [2] * math.comb(params["n"], 2)
    if sampler == "sr":
        return [len(_sr_choices(params["M"]))] * math.comb(params["n"], 2)
    raise ParamError(f"unknown sampler {sampler!r}")


def sample_structure(sampler: str, params: dict, seed: int) -> RandomSample:
    sampler = sampler_name(sampler)
    params = dict(params)
    if params.get("n", 0) < 1:
        raise ParamError("n must be positive")
    if sampler in ("domega", "dn") and params.get("m", 0) < 1:
        raise ParamError("m must be positive")
    if sampler == "sr" and (params.get("M", 0) < 2 or params["M"] % 2):
        raise ParamError("M must be even and at least 2")
    rng = _rng(seed)
    ranges = bit_ranges(sampler, params)
    bits = [int(rng.integers(r)) for r in ranges]
    s = build_from_bits(sampler, params, bits)
    if sampler in ("domega", "dn"):
        cols = [list(range(c * params["m"], (c + 1) * params["m"])) for c in range(params["n"])]
    elif sampler == "hatt":
        cols = [[2 * c, 2 * c + 1] for c in range(params["n"])]
    else:
        cols = [list(range(c * params["M"], (c + 1) * params["M"])) for c in range(params["n"])]
    return RandomSample(sampler, params, bits, s, cols)


def sampler_spec(sampler: str, params: dict) -> ClassSpec:
    if sampler == "domega":
        return ClassSpec("DomegaAge")
    if sampler == "dn":
        return ClassSpec("DnAge", param=params["n"])
    if sampler == "hatt":
        return ClassSpec("HatTAge")
    if sampler == "sr":
        return ClassSpec("SemiGenericAge")
    raise ParamError(f"unknown sampler {sampler!r}")


def small_structure(p: QopParams, seed: int | None = None) -> FiniteStructure:
    """The fixed small structure H of an experiment, drawn from the same sampler with k classes."""
    seed = p.seed ^ 0x5EED if seed is None else seed
    if p.sampler in ("domega", "dn"):
        rng = _rng(seed)
        offsets = np.cumsum((0,) + p.a)
        arcs = []
        for i, j in itertools.combinations(range(p.k), 2):
            for x in range(offsets[i], offsets[i + 1]):
                for y in range(offsets[j], offsets[j + 1]):
                    arcs.append((int(x), int(y)) if rng.integers(2) else (int(y), int(x)))
        return digraph(int(offsets[-1]), arcs)
    if p.sampler == "hatt":
        return sample_structure("hatt", {"n": p.k}, seed).structure
    return sample_structure("sr", {"n": p.k, "M": p.M}, seed).structure


# expansions as arrays -------------------------------------------------------------

def h_expansions(sampler: str, params: dict, h: FiniteStructure) -> list[Expansion]:
    if sampler == "sr":
        # expansions of an S_R structure are the convex orders of its columns
        return enumerate_expansions(ClassSpec("DomegaAge"), h.reduct(), check=False)
    return enumerate_expansions(sampler_spec(sampler, params), h)


def random_g_expansion(sample: RandomSample, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray | None]:
    """Uniform random expansion of a sampled structure, as (rank per vertex, label per vertex)."""
    cols = sample.columns
    n = sample.structure.n
    ranks = np.empty(n, dtype=np.int64)
    labels = None
    corder = rng.permutation(len(cols))
    if sample.sampler == "dn":
        names = np.empty(len(cols), dtype=np.int64)
        names[corder] = np.arange(1, len(cols) + 1)
        labels = np.empty(n, dtype=np.int64)
        for c, verts in enumerate(cols):
            labels[verts] = names[c]
    if sample.sampler == "hatt":
        labels = np.empty(n, dtype=np.int64)
    r = 0
    for c in corder:
        verts = [cols[c][i] for i in rng.permutation(len(cols[c]))]
        for pos, v in enumerate(verts):
            ranks[v] = r
            r += 1
            if sample.sampler == "hatt":
                labels[v] = 0 if pos == 0 else 1
    return ranks, labels


def _codes(ranks: np.ndarray, labels: np.ndarray | None, emb: np.ndarray) -> np.ndarray:
    h = emb.shape[1]
    rel = np.argsort(np.argsort(ranks[emb], axis=1), axis=1)
    code = rel @ (h ** np.arange(h, dtype=np.int64))
    if labels is not None:
        base = int(labels.max()) + 1
        code = code * (base ** h) + labels[emb] @ (base ** np.arange(h, dtype=np.int64))
    return code


def _h_code(e: Expansion, base: int | None) -> int:
    h = e.base.n
    code = sum(r * h ** i for i, r in enumerate(e.rank))
    if base is not None:
        code = code * base ** h + sum(l * base ** i for i, l in enumerate(e.labels))
    return code


def expansion_counts(h_exps: list[Expansion], emb: np.ndarray, ranks: np.ndarray, labels: np.ndarray | None) -> list[int]:
    """N_exp(H*, G*) for every H* in the list, for one expansion G* given as arrays."""
    if len(emb) == 0:
        return [0] * len(h_exps)
    base = None if labels is None else int(labels.max()) + 1
    codes = _codes(ranks, labels, emb)
    uniq, freq = np.unique(codes, return_counts=True)
    table = dict(zip(uniq.tolist(), freq.tolist()))
    return [table.get(_h_code(e, base), 0) for e in h_exps]


# closed forms ----------------------------------------------------------------------

def expected_embeddings(sampler: str, params: dict, h_sizes: Sequence[int] | None = None) -> Fraction:
    """The exact mean number of embeddings of H (with k classes) into the random structure."""
    sampler = sampler_name(sampler)
    n, k = params["n"], params["k"]
    if sampler in ("domega", "dn"):
        a = list(h_sizes if h_sizes is not None else params.get("a") or (1,) * k)
        m = params["m"]
        value = Fraction(falling(n, k))
        for x in a:
            value *= falling(m, x)
        cross = sum(a[l] * a[j] for l in range(k) for j in range(l + 1, k))
        return value / 2 ** cross
    if sampler == "hatt":
        return Fraction(falling(n, k) * 2 ** k, 2 ** math.comb(k, 2))
    if sampler == "sr":
        M = params["M"]
        p = Fraction(2, math.comb(M, M // 2) ** 2)
        return falling(n, k) * Fraction(math.factorial(M)) ** k * p ** math.comb(k, 2)
    raise Unsupported(f"no closed form for sampler {sampler!r}")


def sensitivity_bound(sampler: str, params: dict, h_sizes: Sequence[int] | None = None) -> int:
    """The displayed bound on how much one random variable can move N_emb."""
    sampler = sampler_name(sampler)
    n, k = params["n"], params["k"]
    if k < 2:
        return 0
    head = falling(k, 2) * falling(n - 2, k - 2)
    if sampler == "domega":
        a = list(h_sizes if h_sizes is not None else params.get("a") or (1,) * k)
        return head * math.prod(falling(params["m"], x) for x in a)
    if sampler == "dn":
        a = list(h_sizes if h_sizes is not None else params.get("a") or (1,) * k)
        m = params["m"]
        best = 0
        for i, j in itertools.permutations(range(k), 2):
            term = a[i] * falling(m - 1, a[i] - 1) * a[j] * falling(m - 1, a[j] - 1)
            term *= math.prod(math.comb(m, a[l]) for l in range(k) if l not in (i, j))
            best = max(best, term)
        return head * best
    if sampler == "hatt":
        return head * 2 ** k
    if sampler == "sr":
        return head * math.factorial(params["M"]) ** k
    raise Unsupported(f"no sensitivity bound for sampler {sampler!r}")


def embedding_array(h: FiniteStructure, g: FiniteStructure) -> np.ndarray:
    embs = list(iter_embeddings(h, g))
    if not embs:
        return np.zeros((0, h.n), dtype=np.int64)
    return np.array(embs, dtype=np.int64)


def single_edge_sensitivity(sample: RandomSample, h: FiniteStructure, flip: int, value: int | None = None) -> int:
    """Change in N_emb(H, G) after changing one random variable (to ``value``, or the next value)."""
    ranges = bit_ranges(sample.sampler, sample.params)
    if not (0 <= flip < len(ranges)):
        raise ParamError(f"flip index {flip} out of range 0..{len(ranges) - 1}")
    bits = list(sample.bits)
    bits[flip] = (bits[flip] + 1) % ranges[flip] if value is None else int(value)
    if bits[flip] == sample.bits[flip]:
        return 0
    before = sum(1 for _ in iter_embeddings(h, sample.structure))
    after = sum(1 for _ in iter_embeddings(h, build_from_bits(sample.sampler, sample.params, bits)))
    return after - before


# experiments ---------------------------------------------------------------------

@dataclass
class QopRunReport:
    params: dict
    rho: Fraction
    h: dict
    emb_counts: list
    exp_counts: list
    deviations: list
    max_deviation: float
    degenerate_trials: int
    expected_embeddings: Fraction
    mcdiarmid_p: float
    log_mcdiarmid_p: float
    constants: dict

    def passing_fraction(self, threshold: float) -> float:
        good = [d for d in self.deviations if d is not None]
        return sum(1 for d in good if d < threshold) / len(good) if good else 0.0

    def to_json(self) -> dict:
        return {
            "params": self.params,
            "rho": str(self.rho),
            "H": self.h,
            "emb_counts": self.emb_counts,
            "exp_counts": self.exp_counts,
            "deviations": self.deviations,
            "max_deviation": self.max_deviation,
            "degenerate_trials": self.degenerate_trials,
            "expected_embeddings": str(self.expected_embeddings),
            "mcdiarmid_p": self.mcdiarmid_p,
            "log_mcdiarmid_p": self.log_mcdiarmid_p,
            "constants": self.constants,
        }

    def csv_rows(self) -> list[list]:
        rows = [["trial", "n_emb", "worst_n_exp", "max_deviation"]]
        for t, (ne, ex, d) in enumerate(zip(self.emb_counts, self.exp_counts, self.deviations)):
            rows.append([t, ne, ex, "" if d is None else f"{d:.6f}"])
        return rows


def _log_expansion_count(sampler: str, params: dict) -> float:
    n = params["n"]
    if sampler == "domega":
        return math.lgamma(n + 1) + n * math.lgamma(params["m"] + 1)
    if sampler == "dn":
        return math.lgamma(n + 1) + n * math.lgamma(params["m"] + 1)
    if sampler == "hatt":
        return math.lgamma(n + 1) + n * math.log(2)
    return math.lgamma(n + 1) + n * math.lgamma(params["M"] + 1)


def _bounded_differences(p: QopParams, h_count: int) -> dict:
    """Per-variable changes of f = N_emb/I and f* = N_exp/I implied by the displayed bounds."""
    params = {"n": p.n, "k": p.k, "m": p.m, "M": p.M, "a": p.a}
    I = expected_embeddings(p.sampler, params, p.a)
    change = sensitivity_bound(p.sampler, params, p.a)
    nvars = len(bit_ranges(p.sampler, params))
    a_f = float(Fraction(change) / I) if I else float("inf")
    # N_exp counts a subset of the embeddings, so it moves by no more than N_emb's bound
    a_fstar = a_f
    return {"I": I, "a_f": a_f, "a_fstar": a_fstar, "variables": nvars,
            "epsilon_1": a_f * p.n ** 2, "epsilon_2": a_fstar * p.n ** 2}


def run_qop_experiment(p: QopParams, h: FiniteStructure | None = None) -> QopRunReport:
    """Sample G per trial (seed xor trial index), count embeddings and expansion-respecting embeddings."""
    params = {"n": p.n, "k": p.k, "m": p.m, "M": p.M, "a": p.a}
    if h is None:
        h = small_structure(p)
    if p.sampler == "sr":
        if not validate_structure(h.reduct(), ClassSpec("SemiGenericAge")):
            raise DomainError("H is not semi-generic")
    elif not validate_structure(h, sampler_spec(p.sampler, params)):
        raise DomainError("H is not in the sampler's age")
    h_exps = h_expansions(p.sampler, params, h)
    rho = Fraction(1, len(h_exps))
    emb_counts, exp_counts, deviations = [], [], []
    degenerate = 0
    for t in range(p.trials):
        sample = sample_structure(p.sampler, params, p.seed ^ t)
        emb = embedding_array(h, sample.structure)
        emb_counts.append(int(len(emb)))
        if len(emb) == 0:
            degenerate += 1
            exp_counts.append(0)
            deviations.append(None)
            continue
        rng = _rng((p.seed ^ t) + 0x9E3779B97F4A7C15)
        worst, worst_count = -1.0, 0
        for _ in range(p.g_expansions):
            ranks, labels = random_g_expansion(sample, rng)
            for c in expansion_counts(h_exps, emb, ranks, labels):
                dev = abs(c / len(emb) - float(rho))
                if dev > worst:
                    worst, worst_count = dev, c
        exp_counts.append(worst_count)
        deviations.append(worst)
    bd = _bounded_differences(p, len(h_exps))
    exp_f = 2 * p.D ** 2 / (bd["variables"] * bd["a_f"] ** 2) if bd["a_f"] else math.inf
    exp_fstar = 2 * p.D ** 2 / (bd["variables"] * bd["a_fstar"] ** 2) if bd["a_fstar"] else math.inf
    exponent = min(exp_f, exp_fstar)
    log_p = math.log(2) + math.log(len(h_exps)) + _log_expansion_count(p.sampler, params) - exponent
    good = [d for d in deviations if d is not None]
    constants = {
        "zeta": 1,
        "delta_1": exp_f / (p.D ** 2 * p.n ** 2) if math.isfinite(exp_f) else None,
        "delta_2": exp_fstar / (p.D ** 2 * p.n ** 2) if math.isfinite(exp_fstar) else None,
        "epsilon_1": bd["epsilon_1"],
        "epsilon_2": bd["epsilon_2"],
        "a_f": bd["a_f"],
        "random_variables": bd["variables"],
    }
    return QopRunReport(
        p.to_json(), rho, h.to_json(), emb_counts, exp_counts, deviations,
        max(good) if good else 0.0, degenerate, bd["I"],
        math.exp(log_p) if log_p < 700 else math.inf, log_p, constants,
    )


# hypergraph method ---------------------------------------------------------------

@dataclass
class Hypergraph:
    n: int
    k: int
    edges: list
    report: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "edges": [sorted(e) for e in self.edges], "report": self.report}


def girth_at_least_four(hg: Hypergraph) -> bool:
    """Exact check: k-uniform, pairwise intersections of size at most one, no Berge 3-cycle."""
    edges = [frozenset(e) for e in hg.edges]
    if any(len(e) != hg.k for e in edges) or len(set(edges)) != len(edges):
        return False
    for e, f in itertools.combinations(edges, 2):
        if len(e & f) > 1:
            return False
    for e, f, g in itertools.combinations(edges, 3):
        ef, fg, ge = e & f, f & g, g & e
        if ef and fg and ge and len(ef | fg | ge) == 3:
            return False
    return True


def _closes_triangle(new: frozenset, edges: list, incident: dict) -> bool:
    met = {}
    for v in new:
        for idx in incident.get(v, ()):
            met.setdefault(idx, v)
    idxs = list(met)
    for i, j in itertools.combinations(idxs, 2):
        common = edges[i] & edges[j]
        if common and met[i] != met[j]:
            (w,) = common
            if w not in new:
                return True
    return False


def build_girth4_hypergraph(n: int, k: int, seed: int, c: float = 0.5, max_attempts: int | None = None) -> Hypergraph:
    """Random k-subsets kept unless they meet an edge in two points or close a Berge 3-cycle."""
    if k < 2 or n < k:
        raise ParamError("need n >= k >= 2")
    rng = _rng(seed)
    target = max(1, math.ceil(c * n ** (4 / 3)))
    attempts = max_attempts if max_attempts is not None else 200 * target
    edges: list = []
    incident: dict = {}
    tried = 0
    while len(edges) < target and tried < attempts:
        tried += 1
        new = frozenset(int(v) for v in rng.choice(n, size=k, replace=False))
        if any(len(new & edges[i]) > 1 for v in new for i in incident.get(v, ())):
            continue
        if _closes_triangle(new, edges, incident):
            continue
        for v in new:
            incident.setdefault(v, []).append(len(edges))
        edges.append(new)
    report = {"target": target, "edges": len(edges), "attempts": tried, "c": c, "reached": len(edges) >= target}
    return Hypergraph(n, k, edges, report)


@dataclass(frozen=True)
class GnMode:
    m: int


@dataclass(frozen=True)
class FTMode:
    forbidden: tuple


def plant_hypergraph_digraph(hg: Hypergraph, h: FiniteStructure, mode, seed: int) -> tuple[FiniteStructure, list]:
    """Place a random copy of H on each hyperedge; other pairs get a random arc (Gn) or stay perpendicular (FT).

    Returns the digraph and the copy maps (H vertex -> G vertex), one per hyperedge.
    """
    if h.n != hg.k:
        raise ParamError("H must have exactly as many vertices as a hyperedge")
    rng = _rng(seed)
    arcs = set()
    covered = set()
    copies = []
    for e in hg.edges:
        verts = sorted(e)
        perm = rng.permutation(len(verts))
        phi = [verts[int(i)] for i in perm]
        copies.append(tuple(phi))
        for x, y in h.arcs:
            arcs.add((phi[x], phi[y]))
        for x, y in itertools.combinations(verts, 2):
            covered.add((x, y))
    if isinstance(mode, GnMode):
        for x, y in itertools.combinations(range(hg.n), 2):
            if (x, y) not in covered:
                arcs.add((x, y) if rng.integers(2) else (y, x))
    elif not isinstance(mode, FTMode):
        raise ParamError("mode must be GnMode or FTMode")
    g = digraph(hg.n, arcs)
    return g, copies


def mode_valid(g: FiniteStructure, mode) -> bool:
    """Exhaustive re-check of the omitted configurations."""
    if isinstance(mode, GnMode):
        return not has_independent_set(g, mode.m + 1)
    from .structures import has_embedding

    return not any(has_embedding(t, g) for t in mode.forbidden)


def contains_c3(g: FiniteStructure) -> bool:
    out = g.out_masks
    for x, y in g.arcs:
        # some z with y -> z and z -> x
        if out[y] & g.in_masks[x]:
            return True
    return False


@dataclass
class HypergraphQopReport:
    s: int
    L: int
    n_emb: int
    rho: Fraction
    counts: list
    max_deviation: float

    def to_json(self) -> dict:
        return {"hyperedges": self.s, "automorphisms": self.L, "n_emb": self.n_emb, "rho": str(self.rho),
                "counts": self.counts, "max_deviation": self.max_deviation}


def qop_hypergraph_check(h: FiniteStructure, g: FiniteStructure, hg: Hypergraph, g_expansions: int, seed: int) -> HypergraphQopReport:
    """Embeddings landing inside single hyperedges, tallied against random linear orders of G."""
    embs = []
    for e in hg.edges:
        sub = sorted(e)
        local = g.induced(sub)
        for phi in iter_embeddings(h, local):
            embs.append([sub[i] for i in phi])
    emb = np.array(embs, dtype=np.int64).reshape(-1, h.n)
    L = len(automorphisms(h))
    h_exps = [Expansion(h, p) for p in itertools.permutations(range(h.n))]
    rho = Fraction(1, len(h_exps))
    rng = _rng(seed ^ 0xC0FFEE)
    worst = 0.0
    counts = []
    for _ in range(g_expansions):
        ranks = np.empty(g.n, dtype=np.int64)
        ranks[rng.permutation(g.n)] = np.arange(g.n)
        row = expansion_counts(h_exps, emb, ranks, None)
        counts.append(row)
        if len(emb):
            worst = max(worst, max(abs(c / len(emb) - float(rho)) for c in row))
    return HypergraphQopReport(len(hg.edges), L, int(len(emb)), rho, counts, worst)
