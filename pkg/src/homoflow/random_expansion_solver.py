"""Constraint systems for consistent random expansions, exact feasibility, and certificates."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import lp
from .errors import DomainError, StepError
from .expansion_classes import (
    CompositeExpansion,
    Expansion,
    act,
    enumerate_expansions,
    expansion_from_json,
    pullback,
    restriction_rows,
    validate_expansion,
)
from .structures import (
    ClassSpec,
    FiniteStructure,
    automorphisms,
    canonical_form,
    canonical_relabel,
    find_isomorphism,
    is_embedding,
    iter_embeddings,
    validate_structure,
)


@dataclass
class Fragment:
    """Finitely many structures of one age with the embeddings whose (E) rows are imposed.

    ``embeddings`` lists ``(sub index, sup index, map)``.  ``focus`` optionally names an
    expansion ``(structure index, expansion)`` whose weight the solver tries to keep
    positive; a zero maximum there is the typical non-amenability witness.  With
    ``close`` set, every substructure (up to isomorphism) joins the fragment together
    with the rows of all one-point extensions.
    """

    structures: list
    embeddings: list = field(default_factory=list)
    names: list = field(default_factory=list)
    focus: tuple | None = None
    close: bool = False
    named_expansions: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "structures": [s.to_json() for s in self.structures],
            "names": list(self.names),
            "embeddings": [[i, j, list(m)] for i, j, m in self.embeddings],
            "focus": None if self.focus is None else [self.focus[0], self.focus[1].to_json()],
            "close": self.close,
            "named_expansions": {k: [i, e.to_json()] for k, (i, e) in self.named_expansions.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Fragment":
        structures = [FiniteStructure.from_json(s) for s in data["structures"]]
        focus = data.get("focus")
        return cls(
            structures,
            [(int(i), int(j), tuple(m)) for i, j, m in data.get("embeddings", [])],
            list(data.get("names", [])),
            None if focus is None else (int(focus[0]), expansion_from_json(focus[1])),
            bool(data.get("close", False)),
            {k: (int(i), expansion_from_json(e)) for k, (i, e) in data.get("named_expansions", {}).items()},
        )


@dataclass
class Row:
    kind: str
    payload: dict
    coeffs: dict
    rhs: Fraction


@dataclass
class ConstraintSystem:
    spec: ClassSpec
    structures: list
    variables: list
    index: dict
    rows: list
    focus: int | None = None

    def var_of(self, sidx: int, e) -> int:
        return self.index[(sidx, e.key)]

    def matrix(self) -> tuple[list[list[Fraction]], list[Fraction]]:
        A = []
        for r in self.rows:
            row = [Fraction(0)] * len(self.variables)
            for j, c in r.coeffs.items():
                row[j] = c
            A.append(row)
        return A, [r.rhs for r in self.rows]


def _close_fragment(spec: ClassSpec, frag: Fragment) -> tuple[list, list]:
    structures = list(frag.structures)
    keys = [canonical_form(s) for s in structures]
    embeddings = list(frag.embeddings)
    queue = list(range(len(structures)))
    while queue:
        bi = queue.pop(0)
        b = structures[bi]
        if b.n <= 1:
            continue
        for v in range(b.n):
            verts = [u for u in range(b.n) if u != v]
            sub = b.induced(verts)
            key = canonical_form(sub)
            if key in keys:
                ri = keys.index(key)
            else:
                structures.append(canonical_relabel(sub))
                keys.append(key)
                ri = len(structures) - 1
                queue.append(ri)
            rep = structures[ri]
            iso = find_isomorphism(rep, sub)
            embeddings.append((ri, bi, tuple(verts[iso[i]] for i in range(rep.n))))
    return structures, embeddings


def build_constraints(spec: ClassSpec, frag: Fragment) -> ConstraintSystem:
    """(P) rows, (E) rows for the listed embeddings, (I) rows from isomorphisms."""
    for s in frag.structures:
        if not validate_structure(s, spec):
            raise DomainError(f"fragment structure {s.dumps()} is not in {spec.name}")
    if frag.close:
        structures, embeddings = _close_fragment(spec, frag)
    else:
        structures, embeddings = list(frag.structures), list(frag.embeddings)
    variables = []
    index = {}
    expansions = []
    for si, s in enumerate(structures):
        exps = enumerate_expansions(spec, s)
        expansions.append(exps)
        for e in exps:
            index[(si, e.key)] = len(variables)
            variables.append((si, e))
    rows: list[Row] = []
    seen = set()

    def add(row: Row):
        sig = (tuple(sorted(row.coeffs.items())), row.rhs)
        neg = (tuple(sorted((k, -v) for k, v in row.coeffs.items())), -row.rhs)
        if not row.coeffs or sig in seen or neg in seen:
            return
        seen.add(sig)
        rows.append(row)

    for si, s in enumerate(structures):
        add(Row("P", {"structure": si}, {index[(si, e.key)]: Fraction(1) for e in expansions[si]}, Fraction(1)))
    for (ai, bi, emb) in embeddings:
        a, b = structures[ai], structures[bi]
        if not is_embedding(a, b, emb):
            raise DomainError(f"listed map {emb} is not an embedding")
        groups: dict = {}
        for f in expansions[bi]:
            groups.setdefault(pullback(spec, f, emb, a).key, []).append(f)
        for e in expansions[ai]:
            coeffs = {index[(ai, e.key)]: Fraction(1)}
            for f in groups.get(e.key, []):
                j = index[(bi, f.key)]
                coeffs[j] = coeffs.get(j, Fraction(0)) - 1
            add(Row("E", {"sub": ai, "sup": bi, "embedding": list(emb), "sub_expansion": e}, coeffs, Fraction(0)))
    # (I): automorphisms of each structure, plus one isomorphism onto each later isomorphic copy
    keys = [canonical_form(s) for s in structures]
    for si, s in enumerate(structures):
        first = keys.index(keys[si])
        if first != si:
            iso = find_isomorphism(structures[first], s)
            for e in expansions[first]:
                img = act(spec, e, iso, s)
                coeffs = {index[(first, e.key)]: Fraction(1)}
                j = index[(si, img.key)]
                coeffs[j] = coeffs.get(j, Fraction(0)) - 1
                add(Row("I", {"src": first, "dst": si, "iso": list(iso), "expansion": e}, coeffs, Fraction(0)))
            continue
        for sigma in automorphisms(s):
            if list(sigma) == list(range(s.n)):
                continue
            for e in expansions[si]:
                img = act(spec, e, sigma, s)
                if img.key == e.key:
                    continue
                add(Row("I", {"src": si, "dst": si, "iso": list(sigma), "expansion": e},
                        {index[(si, e.key)]: Fraction(1), index[(si, img.key)]: Fraction(-1)}, Fraction(0)))
    focus = None
    if frag.focus is not None:
        fi, fe = frag.focus
        focus = index[(fi, fe.key)]
    return ConstraintSystem(spec, structures, variables, index, rows, focus)


# certificates ------------------------------------------------------------------

@dataclass
class Certificate:
    kind: str
    spec: str
    structures: list
    variables: list
    steps: list
    combination: dict
    conclusion: dict
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "class": self.spec,
            "structures": self.structures,
            "variables": self.variables,
            "steps": self.steps,
            "combination": self.combination,
            "conclusion": self.conclusion,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Certificate":
        return cls(data["kind"], data["class"], data["structures"], data["variables"], data["steps"],
                   data.get("combination", {}), data["conclusion"], data.get("notes", {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _row_step(system: ConstraintSystem, row: Row, mult: Fraction) -> dict:
    payload = {}
    for k, v in row.payload.items():
        payload[k] = v.to_json() if isinstance(v, (Expansion, CompositeExpansion)) else v
    return {
        "kind": row.kind,
        **payload,
        "multiplier": _frac(mult),
        "equation": {"terms": {str(j): _frac(c) for j, c in sorted(row.coeffs.items())}, "rhs": _frac(row.rhs)},
    }


def _combine(steps_rows: list[tuple[dict, Fraction]]) -> tuple[dict, Fraction]:
    coeffs: dict = {}
    rhs = Fraction(0)
    for terms, r, mult in steps_rows:
        for j, c in terms.items():
            coeffs[j] = coeffs.get(j, Fraction(0)) + mult * c
        rhs += mult * r
    return {j: c for j, c in coeffs.items() if c != 0}, rhs


def _make_certificate(system: ConstraintSystem, dual: list, target: int | None) -> Certificate:
    steps = []
    triples = []
    for row, y in zip(system.rows, dual):
        if y != 0:
            steps.append(_row_step(system, row, y))
            triples.append((row.coeffs, row.rhs, y))
    coeffs, rhs = _combine(triples)
    if target is None:
        conclusion = {"type": "contradiction", "rhs": _frac(rhs)}
    else:
        conclusion = {"type": "forced_zero", "target": target, "rhs": _frac(rhs)}
    return Certificate(
        "Infeasible",
        system.spec.name,
        [s.to_json() for s in system.structures],
        [{"structure": si, "expansion": e.to_json()} for si, e in system.variables],
        steps,
        {"terms": {str(j): _frac(c) for j, c in sorted(coeffs.items())}, "rhs": _frac(rhs)},
        conclusion,
    )


@dataclass
class FeasibilityResult:
    feasible: bool
    weights: dict | None = None
    certificate: Certificate | None = None

    def measure_json(self, system: ConstraintSystem) -> list:
        return [
            {"structure": si, "expansion": e.to_json(), "weight": _frac(self.weights[j])}
            for j, (si, e) in enumerate(system.variables)
        ]


class _Reduced:
    """The system with (I)-linked weights merged into one variable per orbit.

    Solving here is equivalent to solving the full system; a dual vector found here is
    lifted back to the full row set by routing coefficients along a spanning forest of
    the (I) rows, so emitted certificates still speak about the original variables.
    """

    def __init__(self, system: ConstraintSystem):
        self.system = system
        nvar = len(system.variables)
        parent = list(range(nvar))

        def find(v: int) -> int:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        self.tree: list[tuple[int, int, int]] = []  # (row index, u, v) for the row x_u - x_v = 0
        for i, r in enumerate(system.rows):
            if r.kind != "I" or len(r.coeffs) != 2:
                continue
            (u, cu), (v, cv) = sorted(r.coeffs.items())
            if cu == -cv and r.rhs == 0:
                if cu < 0:
                    u, v = v, u
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
                    self.tree.append((i, u, v))
        roots = sorted({find(v) for v in range(nvar)})
        where = {r: k for k, r in enumerate(roots)}
        self.cls = [where[find(v)] for v in range(nvar)]
        self.members: list[list[int]] = [[] for _ in roots]
        for v in range(nvar):
            self.members[self.cls[v]].append(v)
        self.rows: list[int] = []
        self.A: list[list[Fraction]] = []
        self.b: list[Fraction] = []
        seen = set()
        for i, r in enumerate(system.rows):
            vec = [Fraction(0)] * len(roots)
            for j, c in r.coeffs.items():
                vec[self.cls[j]] += c
            if not any(vec) and r.rhs == 0:
                continue
            sig = (tuple(vec), r.rhs)
            if sig in seen:
                continue
            seen.add(sig)
            self.rows.append(i)
            self.A.append(vec)
            self.b.append(r.rhs)

    def solve(self, c: list | None, extra_all_ones: bool = False) -> lp.LPResult:
        A = [row + [sum(row)] for row in self.A] if extra_all_ones else self.A
        return lp.solve(A, self.b, c)

    def lift_dual(self, y: list, target: int | None) -> list[Fraction]:
        system = self.system
        full = [Fraction(0)] * len(system.rows)
        for i, yi in zip(self.rows, y):
            full[i] = yi
        coef = [Fraction(0)] * len(system.variables)
        for i, yi in enumerate(full):
            if yi:
                for j, c in system.rows[i].coeffs.items():
                    coef[j] += yi * c
        # route each orbit's coefficient mass onto one member (the target, if it lies there)
        adj: dict = {}
        for i, u, v in self.tree:
            adj.setdefault(u, []).append((i, u, v, v))
            adj.setdefault(v, []).append((i, u, v, u))
        for members in self.members:
            if len(members) == 1:
                continue
            root = target if target in members else members[0]
            order, parent_edge, stack, seen = [], {}, [root], {root}
            while stack:
                w = stack.pop()
                order.append(w)
                for i, u, v, other in adj.get(w, []):
                    if other not in seen:
                        seen.add(other)
                        parent_edge[other] = (i, u, v)
                        stack.append(other)
            for w in reversed(order):
                if w == root:
                    continue
                i, u, v = parent_edge[w]
                mass = coef[w]
                if not mass:
                    continue
                z = -mass if w == u else mass  # row adds +z to x_u and -z to x_v
                full[i] += z
                coef[u] += z
                coef[v] -= z
        return full


def _maximize(red: _Reduced, target: int) -> lp.LPResult:
    c = [Fraction(0)] * len(red.members)
    c[red.cls[target]] = Fraction(1)
    return red.solve(c)


def coordinate_range(system: ConstraintSystem, j: int) -> tuple[Fraction, Fraction] | None:
    """Minimum and maximum of one weight over the feasible set (None when infeasible)."""
    red = _Reduced(system)
    c = [Fraction(0)] * len(red.members)
    c[red.cls[j]] = Fraction(1)
    hi = red.solve(c)
    if hi.status != "optimal":
        return None
    c[red.cls[j]] = Fraction(-1)
    lo = red.solve(c)
    return -lo.value, hi.value


def solve_feasibility(system: ConstraintSystem) -> FeasibilityResult:
    """A strictly positive solution, or a certificate that none exists."""
    red = _Reduced(system)
    k = len(red.members)
    if system.focus is not None:
        res = _maximize(red, system.focus)
        if res.status == "infeasible":
            return FeasibilityResult(False, certificate=_make_certificate(system, red.lift_dual(res.dual, None), None))
        if res.value == 0:
            dual = red.lift_dual(res.dual, system.focus)
            return FeasibilityResult(False, certificate=_make_certificate(system, dual, system.focus))
    # maximise t with x = z + t*1, z >= 0
    res = red.solve([Fraction(0)] * k + [Fraction(1)], extra_all_ones=True)
    if res.status == "infeasible":
        return FeasibilityResult(False, certificate=_make_certificate(system, red.lift_dual(res.dual, None), None))
    t = res.x[-1]
    if t > 0:
        weights = {j: res.x[red.cls[j]] + t for j in range(len(system.variables))}
        return FeasibilityResult(True, weights=weights)
    for cls, members in enumerate(red.members):
        j = members[0]
        r = _maximize(red, j)
        if r.status == "optimal" and r.value == 0:
            return FeasibilityResult(False, certificate=_make_certificate(system, red.lift_dual(r.dual, j), j))
    raise AssertionError("no strictly positive point yet every weight can be positive")


def check_measure(system: ConstraintSystem, weights: Sequence[Fraction]) -> list[int]:
    """Indices of rows violated by the given weights (empty when all hold exactly)."""
    bad = []
    for i, r in enumerate(system.rows):
        if sum(c * weights[j] for j, c in r.coeffs.items()) != r.rhs:
            bad.append(i)
    return bad


def uniform_weights(system: ConstraintSystem) -> list[Fraction]:
    counts: dict = {}
    for si, _ in system.variables:
        counts[si] = counts.get(si, 0) + 1
    return [Fraction(1, counts[si]) for si, _ in system.variables]


def pinned_value(spec: ClassSpec, s: FiniteStructure) -> Fraction | None:
    """1/#(s) when all expansions of s are isomorphic (so isomorphism invariance pins the weight)."""
    from .measures import expansion_type

    exps = enumerate_expansions(spec, s)
    types = {expansion_type(e) for e in exps}
    return Fraction(1, len(exps)) if len(types) == 1 else None


# replay --------------------------------------------------------------------------

def _recompute_row(spec: ClassSpec, structures: list, var_index: dict, step: dict, pos: int) -> tuple[dict, Fraction]:
    kind = step.get("kind")

    def var(si: int, e) -> str:
        key = (si, e.key)
        if key not in var_index:
            raise StepError(pos, "recomputed row mentions an expansion missing from the variable table")
        return var_index[key]

    try:
        if kind == "P":
            si = step["structure"]
            return {var(si, e): Fraction(1) for e in enumerate_expansions(spec, structures[si])}, Fraction(1)
        if kind == "E":
            ai, bi = step["sub"], step["sup"]
            a, b = structures[ai], structures[bi]
            emb = tuple(step["embedding"])
            if not is_embedding(a, b, emb):
                raise StepError(pos, "map is not an embedding")
            e = expansion_from_json(step["sub_expansion"])
            if e.base != a or not validate_expansion(spec, e):
                raise StepError(pos, "sub expansion is not a valid expansion of the sub structure")
            terms = {var(ai, e): Fraction(1)}
            for f in enumerate_expansions(spec, b):
                if pullback(spec, f, emb, a).key == e.key:
                    v = var(bi, f)
                    terms[v] = terms.get(v, Fraction(0)) - 1
            return {k: c for k, c in terms.items() if c}, Fraction(0)
        if kind == "I":
            si, di = step["src"], step["dst"]
            s, d = structures[si], structures[di]
            iso = tuple(step["iso"])
            if s.n != d.n or not is_embedding(s, d, iso):
                raise StepError(pos, "map is not an isomorphism")
            e = expansion_from_json(step["expansion"])
            if e.base != s or not validate_expansion(spec, e):
                raise StepError(pos, "expansion is not valid for the source structure")
            img = act(spec, e, iso, d)
            terms = {var(si, e): Fraction(1)}
            v = var(di, img)
            terms[v] = terms.get(v, Fraction(0)) - 1
            return {k: c for k, c in terms.items() if c}, Fraction(0)
    except StepError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise StepError(pos, f"malformed step: {exc}") from exc
    raise StepError(pos, f"unknown step kind {kind!r}")


def replay_certificate(cert: Certificate, spec: ClassSpec) -> dict:
    """Recompute every step from scratch; raise StepError at the first inconsistency."""
    structures = [FiniteStructure.from_json(s) for s in cert.structures]
    var_index = {}
    for j, v in enumerate(cert.variables):
        e = expansion_from_json(v["expansion"])
        var_index[(v["structure"], e.key)] = str(j)
    total: dict = {}
    rhs = Fraction(0)
    for pos, step in enumerate(cert.steps):
        terms, r = _recompute_row(spec, structures, var_index, step, pos)
        claimed = step.get("equation", {})
        claimed_terms = {k: Fraction(v) for k, v in claimed.get("terms", {}).items()}
        if claimed_terms != terms or Fraction(claimed.get("rhs", "0")) != r:
            raise StepError(pos, "recorded equation differs from the recomputed one")
        mult = Fraction(step["multiplier"])
        for k, c in terms.items():
            total[k] = total.get(k, Fraction(0)) + mult * c
        rhs += mult * r
    total = {k: c for k, c in total.items() if c}
    if any(c < 0 for c in total.values()):
        raise StepError(len(cert.steps), "combined equation has a negative coefficient")
    concl = cert.conclusion
    if concl.get("type") == "contradiction":
        if rhs >= 0:
            raise StepError(len(cert.steps), "combined right-hand side is not negative")
    elif concl.get("type") == "forced_zero":
        target = str(concl["target"])
        if rhs != 0 or total.get(target, Fraction(0)) <= 0:
            raise StepError(len(cert.steps), "combination does not force the target weight to zero")
    else:
        raise StepError(len(cert.steps), "unknown conclusion")
    return {"terms": total, "rhs": rhs}


def verify_certificate(cert: Certificate, spec: ClassSpec) -> bool:
    try:
        replay_certificate(cert, spec)
    except StepError:
        return False
    return True


# the two-cover argument written out by hand -----------------------------------

def hand_qhat_certificate() -> tuple[Certificate, dict]:
    """Certificate for the three-column two-cover, written step by step rather than by the LP.

    Every expansion of the two-column structure A is isomorphic to the chosen A*, and
    every expansion of the three-column structure B to the unique B* extending A*.
    So the weight of A* is pinned at 1/#(A) and that of B* at 1/#(B); the (E) row
    says the two agree.  Returns the certificate and a small report of the pins.
    """
    from .expansion_classes import qhat_expansion_iso, qhat_standard

    spec = ClassSpec("HatQAge")
    b = qhat_standard(3)
    a = b.induced([0, 1, 2, 3])
    a_star = Expansion(a, (0, 1, 3, 2), (1, 0, 0, 1))
    b_star = Expansion(b, (0, 1, 5, 4, 3, 2), (1, 0, 0, 1, 0, 1))
    a_exps = enumerate_expansions(spec, a)
    b_exps = enumerate_expansions(spec, b)
    variables = [(0, e) for e in a_exps] + [(1, e) for e in b_exps]
    index = {(si, e.key): str(j) for j, (si, e) in enumerate(variables)}
    xa, xb = index[(0, a_star.key)], index[(1, b_star.key)]
    one = "1"
    steps = []

    def step(kind: str, payload: dict, terms: dict, rhs: str, mult: Fraction) -> None:
        steps.append({"kind": kind, **payload, "multiplier": str(mult), "equation": {"terms": terms, "rhs": rhs}})

    # sum over B, then replace every other B-expansion by B* through an isomorphism
    step("P", {"structure": 1}, {index[(1, e.key)]: one for e in b_exps}, "1", Fraction(1))
    for e in b_exps:
        if e.key == b_star.key:
            continue
        iso = qhat_expansion_iso(b_star, e)
        step("I", {"src": 1, "dst": 1, "iso": list(iso), "expansion": b_star.to_json()},
             {xb: one, index[(1, e.key)]: "-1"}, "0", Fraction(1))
    # six copies of: weight(A*) equals weight(B*), B* being the only extension
    step("E", {"sub": 0, "sup": 1, "embedding": [0, 1, 2, 3], "sub_expansion": a_star.to_json()},
         {xa: one, xb: "-1"}, "0", Fraction(6))
    # and minus three halves of: four times weight(A*) equals one
    half = Fraction(-3, 2)
    step("P", {"structure": 0}, {index[(0, e.key)]: one for e in a_exps}, "1", half)
    for e in a_exps:
        if e.key == a_star.key:
            continue
        iso = qhat_expansion_iso(a_star, e)
        step("I", {"src": 0, "dst": 0, "iso": list(iso), "expansion": a_star.to_json()},
             {xa: one, index[(0, e.key)]: "-1"}, "0", half)
    cert = Certificate(
        "Infeasible",
        spec.name,
        [a.to_json(), b.to_json()],
        [{"structure": si, "expansion": e.to_json()} for si, e in variables],
        steps,
        {"terms": {}, "rhs": "-1/2"},
        {"type": "contradiction", "rhs": "-1/2"},
        {"A*": int(xa), "B*": int(xb)},
    )
    report = {
        "pinned_A_star": str(pinned_value(spec, a)),
        "pinned_B_star": str(pinned_value(spec, b)),
        "extensions_of_A_star": sum(1 for e in b_exps if pullback(spec, e, (0, 1, 2, 3), a).key == a_star.key),
    }
    return cert, report


# density criterion --------------------------------------------------------------

@dataclass
class DensityReport:
    passed: bool
    checked_pairs: int
    counterexample: dict | None = None

    def to_json(self) -> dict:
        return {"result": "Pass" if self.passed else "CounterexamplePair",
                "checked_pairs": self.checked_pairs, "counterexample": self.counterexample}


def _semi_generic_blocks(s: FiniteStructure):
    """All semi-generic expansions of ``s`` as numpy blocks, one per column order.

    Each block is ``(ranks, R)``: every row of ``ranks`` (convex orders) combines with
    every slice of ``R`` (one per choice of the pair bits), since for a fixed column
    order the order and the relation are chosen independently.  The relation is
    affine in the pair bits: flipping the bit of a column pair toggles R on every
    cross pair between those two columns.
    """
    import numpy as np
    from .expansion_classes import _convex_orders
    from .structures import column_index

    cols, where = column_index(s)
    k, n = len(cols), s.n
    pairs = list(itertools.combinations(range(k), 2))
    arc = np.zeros((n, n), dtype=np.int8)
    for x, y in s.arcs:
        arc[x, y] = 1
    toggles = np.zeros((len(pairs), n, n), dtype=np.int8)
    for t, (i, j) in enumerate(pairs):
        for x in cols[i]:
            for y in cols[j]:
                toggles[t, x, y] = toggles[t, y, x] = 1
    bits = ((np.arange(2 ** len(pairs))[:, None] >> np.arange(len(pairs))[None, :]) & 1).astype(np.int8)
    flips = np.tensordot(bits, toggles, axes=(1, 0)) % 2 if pairs else np.zeros((1, n, n), dtype=np.int8)
    for corder in itertools.permutations(range(k)):
        pos = {c: i for i, c in enumerate(corder)}
        base = np.zeros((n, n), dtype=np.int8)
        for i, j in pairs:
            p, q = (i, j) if pos[i] < pos[j] else (j, i)
            x0, y0 = cols[p][0], cols[q][0]
            for x in cols[p]:
                for y in cols[q]:
                    base[x, y] = arc[x0, y] ^ arc[x0, y0]
                    base[y, x] = arc[x, y0]
        ranks = []
        for order, _ in _convex_orders(cols, [list(corder)]):
            rk = [0] * n
            for r, v in enumerate(order):
                rk[v] = r
            ranks.append(rk)
        yield np.array(ranks, dtype=np.int64), (flips ^ base[None, :, :]).astype(np.int64)


def _semi_generic_codes(blocks: list, subset: Sequence[int]):
    """One integer per expansion encoding its restriction to ``subset``."""
    import numpy as np

    sub = list(subset)
    r = len(sub)
    off = [(i, j) for i in range(r) for j in range(r) if i != j]
    rank_weights = r ** np.arange(r, dtype=np.int64)
    bit_weights = 2 ** np.arange(len(off), dtype=np.int64)
    out = []
    for ranks, R in blocks:
        rel = np.argsort(np.argsort(ranks[:, sub], axis=1), axis=1)
        rcode = rel @ rank_weights
        if off:
            rows = np.array([sub[i] for i, _ in off])
            cols = np.array([sub[j] for _, j in off])
            bcode = R[:, rows, cols] @ bit_weights
        else:
            bcode = np.zeros(R.shape[0], dtype=np.int64)
        out.append(np.add.outer(rcode * (2 ** len(off)), bcode).ravel())
    return np.concatenate(out)


def _density_semi_generic(spec: ClassSpec, size_bound: int):
    import numpy as np
    from .ages import iso_types

    checked = 0
    for size in range(1, size_bound + 1):
        for b in iso_types(spec, size):
            blocks = list(_semi_generic_blocks(b))
            for r in range(1, size + 1):
                for subset in itertools.combinations(range(size), r):
                    a = b.induced(subset)
                    own = np.unique(_semi_generic_codes(list(_semi_generic_blocks(a)), range(r)))
                    keys, freq = np.unique(_semi_generic_codes(blocks, subset), return_counts=True)
                    checked += len(own)
                    if len(keys) == len(own) and np.array_equal(keys, own) and freq.min() == freq.max():
                        continue
                    # fall back to explicit expansions to describe the failure
                    return None, checked, (b, subset)
    return True, checked, None


def check_density_criterion(spec: ClassSpec, size_bound: int) -> DensityReport:
    """For every b up to the bound and every induced a = b|S, are the relative counts #(a*, b) all equal?"""
    import numpy as np
    from .ages import iso_types

    checked = 0
    todo = None
    if spec.tag == "SemiGenericAge":
        ok, checked, where = _density_semi_generic(spec, size_bound)
        if ok:
            return DensityReport(True, checked)
        todo = [where]
    if todo is None:
        todo = ((b, subset) for size in range(1, size_bound + 1) for b in iso_types(spec, size)
                for r in range(1, size + 1) for subset in itertools.combinations(range(size), r))
    cache_b = None
    for b, subset in todo:
        if cache_b is None or cache_b[0] is not b:
            exps = enumerate_expansions(spec, b, check=False)
            cache_b = (b, exps)
        exps = cache_b[1]
        size, r = b.n, len(subset)
        composite = isinstance(exps[0], CompositeExpansion)
        a = b.induced(subset)
        a_exps = enumerate_expansions(spec, a, check=False)
        checked += len(a_exps)
        if composite:
            tally: dict = {}
            for f in exps:
                k = pullback(spec, f, subset, a).key
                tally[k] = tally.get(k, 0) + 1
            counts = {e.key: tally.get(e.key, 0) for e in a_exps}
        else:
            keys = restriction_rows(exps, size, subset)
            rows, freq = np.unique(keys, axis=0, return_counts=True)
            by_row = {tuple(int(v) for v in row): int(c) for row, c in zip(rows, freq)}
            ref = restriction_rows(a_exps, r, range(r))
            counts = {e.key: by_row.get(tuple(int(v) for v in ref[i]), 0) for i, e in enumerate(a_exps)}
        values = set(counts.values())
        if len(values) > 1 or 0 in values:
            ordered = sorted(a_exps, key=lambda e: counts[e.key])
            lo, hi = ordered[0], ordered[-1]
            return DensityReport(False, checked, {
                "b": b.to_json(),
                "subset": list(subset),
                "a": a.to_json(),
                "first": {"expansion": lo.to_json(), "relative_count": counts[lo.key]},
                "second": {"expansion": hi.to_json(), "relative_count": counts[hi.key]},
            })
    return DensityReport(True, checked)


def check_cofinal_isomorphism(spec: ClassSpec, candidate_family, size_bound: int) -> bool:
    """Every age member up to the bound embeds in a family member, and each member has a single expansion type.

    ``candidate_family`` is an iterable of structures, or a callable taking the bound
    and returning one.
    """
    from .ages import iso_types
    from .measures import expansion_type
    from .structures import has_embedding

    if spec.tag in ("TreeLeafAge", "OrderedTreeLeafAge"):
        from .trees import nice_trees_cofinal

        return nice_trees_cofinal(size_bound)
    family = list(candidate_family(size_bound) if callable(candidate_family) else candidate_family)
    for d in family:
        if not validate_structure(d, spec):
            return False
        types = {expansion_type(e) for e in enumerate_expansions(spec, d, check=False)}
        if len(types) != 1:
            return False
    for size in range(1, size_bound + 1):
        for s in iso_types(spec, size):
            if not any(d.n >= s.n and has_embedding(s, d) for d in family):
                return False
    return True


def uniqueness_probe(system: ConstraintSystem, levels: Sequence[int] | None = None) -> dict:
    """Which weights does the fragment pin down?

    Sweeps the LP (minimum and maximum) over one weight per (I)-orbit, for structures
    whose size is in ``levels`` (default: every size below the largest in the
    fragment).  The top level of a finite fragment is never constrained from above,
    so only the lower levels can be expected to be pinned.
    """
    result = solve_feasibility(system)
    out: dict = {"feasible": result.feasible, "variables": len(system.variables)}
    if not result.feasible:
        return out
    sizes = {s.n for s in system.structures}
    wanted = set(levels) if levels is not None else {n for n in sizes if n < max(sizes)}
    red = _Reduced(system)
    uniform = uniform_weights(system)
    report: dict = {}
    for members in red.members:
        j = members[0]
        n = system.structures[system.variables[j][0]].n
        if n not in wanted:
            continue
        lo, hi = coordinate_range(system, j)
        entry = report.setdefault(n, {"orbits": 0, "pinned": 0, "pinned_to_uniform": 0})
        entry["orbits"] += 1
        if lo == hi:
            entry["pinned"] += 1
            entry["pinned_to_uniform"] += int(lo == uniform[j])
    out["levels"] = {str(n): report[n] for n in sorted(report)}
    out["uniform_feasible"] = check_measure(system, uniform) == []
    out["unique_on_levels"] = all(e["pinned_to_uniform"] == e["orbits"] for e in report.values())
    return out
