"""Expansion families for each age: enumeration, validation, restriction and counting."""
from __future__ import annotations

import functools
import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import BoundExceeded, ConfigError, DomainError, EmbeddingError, NotFound, Unsupported
from .structures import (
    ClassSpec,
    FiniteStructure,
    column_index,
    column_switchings,
    hat_completion,
    digraph,
    is_embedding,
    is_transitive,
    iter_embeddings,
    max_vertices,
    parity_ok,
    perp_partition,
    sector_labelling_valid,
    topological_order,
    untwist,
    validate_structure,
)

LINEAR_TAGS = {"Tournaments", "GnAge", "FTAge", "EdgelessAge"}


@dataclass(frozen=True)
class Expansion:
    base: FiniteStructure
    order: tuple | None = None
    labels: tuple | None = None
    R: frozenset | None = None

    def __post_init__(self):
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        if self.R is not None:
            object.__setattr__(self, "R", frozenset((int(x), int(y)) for x, y in self.R))

    @property
    def key(self) -> tuple:
        return (
            self.order if self.order is not None else (),
            self.labels if self.labels is not None else (),
            tuple(sorted(self.R)) if self.R is not None else (),
        )

    @property
    def rank(self) -> list[int]:
        pos = [0] * self.base.n
        for i, v in enumerate(self.order):
            pos[v] = i
        return pos

    def as_structure(self) -> FiniteStructure:
        """The expanded structure as a decorated digraph (for isomorphism tests)."""
        return FiniteStructure(self.base.n, self.base.arcs, self.labels, self.R, self.order)

    def to_json(self) -> dict:
        out: dict = {"base": self.base.to_json(), "order": list(self.order) if self.order is not None else None}
        if self.labels is not None:
            out["labels"] = {str(v): self.labels[v] for v in range(self.base.n)}
        if self.R is not None:
            out["R"] = sorted([list(p) for p in self.R])
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Expansion":
        base = FiniteStructure.from_json(data["base"])
        labels = None
        if data.get("labels") is not None:
            raw = data["labels"]
            labels = tuple(raw[str(v)] for v in range(base.n)) if isinstance(raw, dict) else tuple(raw)
        R = None if data.get("R") is None else frozenset(tuple(p) for p in data["R"])
        order = None if data.get("order") is None else tuple(data["order"])
        return cls(base, order, labels, R)


@dataclass(frozen=True)
class CompositeExpansion:
    """Expansion of a blown-up structure: one for the quotient, one per class."""

    base: FiniteStructure
    quotient: "Expansion | CompositeExpansion"
    parts: tuple

    @property
    def key(self) -> tuple:
        return ("composite", self.quotient.key, tuple(p.key for p in self.parts))

    def flatten(self) -> tuple[tuple, tuple]:
        """Lexicographic order (classes by quotient order) and paired labels."""
        members = class_members(self.base)
        qorder = _flat_order(self.quotient)
        order = []
        for c in qorder:
            porder = _flat_order(self.parts[c])
            order.extend(members[c][i] for i in porder)
        labels = [None] * self.base.n
        qlab = _flat_labels(self.quotient)
        for c, verts in enumerate(members):
            plab = _flat_labels(self.parts[c])
            for i, v in enumerate(verts):
                labels[v] = (qlab[c] if qlab else None, plab[i] if plab else None)
        return tuple(order), tuple(labels)

    def relation(self) -> frozenset | None:
        """The R pairs of every factor on the blown-up vertices, or None when no factor has R.

        Pairs from the class expansions stay inside a class and pairs from the quotient
        join two classes, so the union loses nothing.
        """
        members = class_members(self.base)
        qrel = _flat_relation(self.quotient)
        prels = [_flat_relation(p) for p in self.parts]
        if qrel is None and all(r is None for r in prels):
            return None
        out = set()
        for c, d in qrel or ():
            out.update((x, y) for x in members[c] for y in members[d])
        for c, rel in enumerate(prels):
            out.update((members[c][i], members[c][j]) for i, j in rel or ())
        return frozenset(out)

    def to_json(self) -> dict:
        order, labels = self.flatten()
        return {
            "base": self.base.to_json(),
            "order": list(order),
            "quotient": self.quotient.to_json(),
            "parts": [p.to_json() for p in self.parts],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CompositeExpansion":
        base = FiniteStructure.from_json(data["base"])
        return cls(base, expansion_from_json(data["quotient"]), tuple(expansion_from_json(p) for p in data["parts"]))


def expansion_from_json(data: dict):
    if "quotient" in data:
        return CompositeExpansion.from_json(data)
    return Expansion.from_json(data)


def _flat_order(e) -> tuple:
    if isinstance(e, CompositeExpansion):
        return e.flatten()[0]
    return e.order if e.order is not None else tuple(range(e.base.n))


def _flat_relation(e):
    if isinstance(e, CompositeExpansion):
        return e.relation()
    return e.R


def _flat_labels(e):
    if isinstance(e, CompositeExpansion):
        return e.flatten()[1]
    return e.labels


# composite helpers ---------------------------------------------------------------

def class_members(s: FiniteStructure) -> list[list[int]]:
    if s.classes is None:
        raise DomainError("composite structure needs explicit classes")
    k = max(s.classes) + 1 if s.n else 0
    members: list[list[int]] = [[] for _ in range(k)]
    for v in range(s.n):
        members[s.classes[v]].append(v)
    return members


def quotient_of(s: FiniteStructure) -> FiniteStructure:
    members = class_members(s)
    arcs = set()
    for c, d in itertools.permutations(range(len(members)), 2):
        if s.arc(members[c][0], members[d][0]):
            arcs.add((c, d))
    return digraph(len(members), arcs)


def part_of(s: FiniteStructure, c: int) -> FiniteStructure:
    return s.induced(class_members(s)[c]).reduct()


# restriction -------------------------------------------------------------------

def pullback(spec: ClassSpec, e, emb: Sequence[int], sub: FiniteStructure):
    """Restrict the expansion ``e`` of ``b`` along the embedding ``emb: sub -> b``."""
    if spec.tag == "Composition":
        return _pullback_composite(spec, e, emb, sub)
    order = None
    if e.order is not None:
        rank = e.rank
        order = tuple(sorted(range(sub.n), key=lambda v: rank[emb[v]]))
    labels = None if e.labels is None else tuple(e.labels[emb[v]] for v in range(sub.n))
    R = None
    if e.R is not None:
        R = frozenset((x, y) for x in range(sub.n) for y in range(sub.n) if x != y and (emb[x], emb[y]) in e.R)
    return Expansion(sub, order, labels, R)


def _pullback_composite(spec: ClassSpec, e: CompositeExpansion, emb, sub: FiniteStructure) -> CompositeExpansion:
    big = e.base
    sub_members = class_members(sub)
    big_members = class_members(big)
    qemb = [big.classes[emb[verts[0]]] for verts in sub_members]
    qsub = quotient_of(sub)
    quotient = pullback(spec.left, e.quotient, qemb, qsub)
    parts = []
    for c, verts in enumerate(sub_members):
        d = qemb[c]
        pos = {v: i for i, v in enumerate(big_members[d])}
        pemb = [pos[emb[v]] for v in verts]
        parts.append(pullback(spec.right, e.parts[d], pemb, part_of(sub, c)))
    return CompositeExpansion(sub, quotient, tuple(parts))


def act(spec: ClassSpec, e, perm: Sequence[int], target: FiniteStructure):
    """Push ``e`` forward along an isomorphism ``perm: base -> target``."""
    inv = [0] * len(perm)
    for v, w in enumerate(perm):
        inv[w] = v
    return pullback(spec, e, inv, target)


# enumeration helpers ------------------------------------------------------------

def linear_extensions(n: int, less: FiniteStructure) -> list[tuple[int, ...]]:
    """All orders of range(n) in which ``x -> y`` in ``less`` puts x first."""
    out: list[tuple[int, ...]] = []
    preds = list(less.in_masks)
    prefix: list[int] = []

    def rec(placed: int):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(n):
            if not (placed >> v) & 1 and preds[v] & ~placed == 0:
                prefix.append(v)
                rec(placed | (1 << v))
                prefix.pop()

    rec(0)
    return out


def _convex_orders(cols: list[list[int]], column_orders: Iterable[Sequence[int]] | None = None):
    """Orders listing whole columns consecutively, paired with the column sequence used."""
    if column_orders is None:
        column_orders = itertools.permutations(range(len(cols)))
    for corder in column_orders:
        for inner in itertools.product(*(itertools.permutations(cols[c]) for c in corder)):
            yield tuple(v for block in inner for v in block), tuple(corder)


def _is_convex(s: FiniteStructure, order: Sequence[int]) -> bool:
    n = len(order)
    for i in range(n):
        for k in range(i + 2, n):
            x, z = order[i], order[k]
            if s.perp(x, z):
                for j in range(i + 1, k):
                    y = order[j]
                    if not (s.perp(x, y) and s.perp(y, z)):
                        return False
    return True


def _hat_q_full_expansions(full: FiniteStructure, cols: list[list[int]]) -> list[Expansion]:
    out = []
    for reps in itertools.product(*cols):
        sub = full.induced(list(reps))
        topo = topological_order(sub)
        if topo is None or not is_transitive(sub):
            continue
        order = []
        labels = [0] * full.n
        for ci in topo:
            col = cols[ci]
            rep = reps[ci]
            other = col[1] if col[0] == rep else col[0]
            order.extend([rep, other])
            labels[rep] = 1
        out.append(Expansion(full, tuple(order), tuple(labels)))
    return out


def _semi_generic_expansions(s: FiniteStructure) -> list[Expansion]:
    cols, where = column_index(s)
    k = len(cols)
    pairs = list(itertools.combinations(range(k), 2))
    out = []
    for corder in itertools.permutations(range(k)):
        pos = {c: i for i, c in enumerate(corder)}
        base_orders = [o for o, _ in _convex_orders(cols, [corder])]
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            R = set()
            for (i, j), bit in zip(pairs, bits):
                p, q = (i, j) if pos[i] < pos[j] else (j, i)
                # with p first: R(x,y) + R(y,x) = [x -> y] for x in p, y in q
                y0 = cols[q][0]
                x0 = cols[p][0]
                r_q = {x: (s.arc(x, y0) + bit) % 2 for x in cols[p]}
                r_p = {y: (s.arc(x0, y) + r_q[x0]) % 2 for y in cols[q]}
                for y in cols[q]:
                    if r_p[y]:
                        R.update((x, y) for x in cols[p])
                for x in cols[p]:
                    if r_q[x]:
                        R.update((y, x) for y in cols[q])
            fR = frozenset(R)
            out.extend(Expansion(s, o, None, fR) for o in base_orders)
    return out


def enumerate_expansions(spec: ClassSpec, a: FiniteStructure, check: bool = True) -> list:
    """Every expansion of ``a`` in the expansion class attached to ``spec``, sorted by key."""
    if a.n > max_vertices() and spec.tag not in ("QAge", "HatQAge"):
        # these two families are built from at most 2^columns transversals, not orderings
        raise BoundExceeded(f"expansion enumeration capped at {max_vertices()} vertices")
    if check and not validate_structure(a, spec):
        raise DomainError(f"structure is not in {spec.name}")
    out = _enumerate(spec, a)
    out.sort(key=lambda e: e.key)
    return out


def _enumerate(spec: ClassSpec, a: FiniteStructure) -> list:
    tag = spec.tag
    n = a.n
    if tag in LINEAR_TAGS:
        return [Expansion(a, p) for p in itertools.permutations(range(n))]
    if tag == "QAge":
        return [Expansion(a, tuple(topological_order(a)))]
    if tag == "PosetAge":
        return [Expansion(a, p) for p in linear_extensions(n, a)]
    if tag in ("S2Age", "S3Age"):
        k = 2 if tag == "S2Age" else 3
        return [Expansion(a, None, lab) for lab in itertools.product(range(k), repeat=n) if sector_labelling_valid(a, lab, k)]
    if tag == "P3Age":
        out = []
        for lab in itertools.product(range(3), repeat=n):
            poset = untwist(a, lab)
            if poset is not None:
                out.extend(Expansion(a, p, lab) for p in linear_extensions(n, poset))
        return out
    if tag == "DomegaAge":
        cols = perp_partition(a)
        return [Expansion(a, o) for o, _ in _convex_orders(cols)]
    if tag == "DnAge":
        cols, where = column_index(a)
        out = []
        for names in itertools.permutations(range(1, spec.param + 1), len(cols)):
            corder = sorted(range(len(cols)), key=lambda c: names[c])
            labels = tuple(names[where[v]] for v in range(n))
            out.extend(Expansion(a, o, labels) for o, _ in _convex_orders(cols, [corder]))
        return out
    if tag == "HatTAge":
        cols = perp_partition(a)
        out = []
        for order, corder in _convex_orders(cols):
            singles = [c[0] for c in cols if len(c) == 1]
            for free in itertools.product((0, 1), repeat=len(singles)):
                labels = [0] * n
                for c in cols:
                    if len(c) == 2:
                        first = c[0] if order.index(c[0]) < order.index(c[1]) else c[1]
                        second = c[1] if first == c[0] else c[0]
                        labels[first], labels[second] = 0, 1
                for v, bit in zip(singles, free):
                    labels[v] = bit
                out.append(Expansion(a, order, tuple(labels)))
        return out
    if tag == "HatQAge":
        full, cols = hat_completion(a)
        seen = {}
        embed = tuple(range(n))
        for e in _hat_q_full_expansions(full, cols):
            r = pullback(spec, e, embed, a)
            seen.setdefault(r.key, r)
        return list(seen.values())
    if tag == "SemiGenericAge":
        return _semi_generic_expansions(a)
    if tag == "Composition":
        return _composite_expansions(spec, a)
    raise Unsupported(f"no expansion family for {tag}")


def _composite_expansions(spec: ClassSpec, a: FiniteStructure) -> list[CompositeExpansion]:
    q = quotient_of(a)
    k = q.n
    qexps = enumerate_expansions(spec.left, q)
    pexps = [enumerate_expansions(spec.right, part_of(a, c)) for c in range(k)]
    return [CompositeExpansion(a, qe, tuple(ps)) for qe in qexps for ps in itertools.product(*pexps)]


def count_expansions(spec: ClassSpec, a: FiniteStructure) -> int:
    return len(enumerate_expansions(spec, a))


# validation ----------------------------------------------------------------------

def semi_generic_witness(e: Expansion) -> FiniteStructure | None:
    """The amalgam of the base with its transversal, or None when no such amalgam exists.

    The transversal point ``t_i`` for column ``i`` is perpendicular to that column,
    points into ``y`` exactly when ``R(x, y)`` for the column's points ``x``, and the
    transversal is a linear tournament following the column order.
    """
    s = e.base
    if e.order is None or e.R is None or e.labels is not None:
        return None
    try:
        cols, where = column_index(s)
    except Exception:
        return None
    if not _is_convex(s, e.order):
        return None
    for x, y in e.R:
        if not s.arc(x, y) and not s.arc(y, x):
            return None
    corder = []
    for v in e.order:
        if where[v] not in corder:
            corder.append(where[v])
    pos = {c: i for i, c in enumerate(corder)}
    k = len(cols)
    n = s.n
    arcs = set(s.arcs)
    for c in range(k):
        t = n + pos[c]
        for y in range(n):
            if where[y] == c:
                continue
            vals = {(x, y) in e.R for x in cols[c]}
            if len(vals) != 1:
                return None
            arcs.add((t, y) if vals.pop() else (y, t))
    for p, q in itertools.combinations(range(k), 2):
        arcs.add((n + p, n + q))
    return digraph(n + k, arcs)


def _semi_generic_valid(e: Expansion) -> bool:
    b = semi_generic_witness(e)
    if b is None:
        return False
    try:
        cols, where = column_index(b)
    except Exception:
        return False
    if len(cols) != len(perp_partition(e.base)):
        return False
    return parity_ok(b, cols, where)


def validate_expansion(spec: ClassSpec, e) -> bool:
    """Check every clause of the expansion definition for ``spec`` directly."""
    s = e.base
    tag = spec.tag
    if tag == "Composition":
        if not isinstance(e, CompositeExpansion):
            return False
        try:
            q = quotient_of(s)
        except DomainError:
            return False
        if len(e.parts) != q.n or e.quotient.base != q:
            return False
        if not validate_expansion(spec.left, e.quotient):
            return False
        return all(p.base == part_of(s, c) and validate_expansion(spec.right, p) for c, p in enumerate(e.parts))
    if isinstance(e, CompositeExpansion):
        return False
    n = s.n
    has_order = e.order is not None and sorted(e.order) == list(range(n))
    if e.order is not None and not has_order:
        return False
    if tag in LINEAR_TAGS:
        return has_order and e.labels is None and e.R is None
    if tag in ("QAge", "PosetAge"):
        if not has_order or e.labels is not None or e.R is not None:
            return False
        rank = e.rank
        return all(rank[x] < rank[y] for x, y in s.arcs)
    if tag in ("S2Age", "S3Age"):
        k = 2 if tag == "S2Age" else 3
        if e.order is not None or e.R is not None or e.labels is None or len(e.labels) != n:
            return False
        if any(not (0 <= l < k) for l in e.labels):
            return False
        return sector_labelling_valid(s, e.labels, k)
    if tag == "P3Age":
        if not has_order or e.R is not None or e.labels is None or any(l not in (0, 1, 2) for l in e.labels):
            return False
        poset = untwist(s, e.labels)
        if poset is None:
            return False
        rank = e.rank
        return all(rank[x] < rank[y] for x, y in poset.arcs)
    if tag == "SemiGenericAge":
        return _semi_generic_valid(e)
    if not has_order or e.R is not None:
        return False
    try:
        cols, where = column_index(s)
    except Exception:
        return False
    if not _is_convex(s, e.order):
        return False
    if tag == "DomegaAge":
        return e.labels is None
    if tag == "DnAge":
        if e.labels is None or any(not (1 <= l <= spec.param) for l in e.labels):
            return False
        names = {}
        for v in range(n):
            names.setdefault(where[v], set()).add(e.labels[v])
        if any(len(v) != 1 for v in names.values()):
            return False
        col_names = [next(iter(names[c])) for c in range(len(cols))]
        if len(set(col_names)) != len(col_names):
            return False
        rank = e.rank
        return all(rank[x] < rank[y] for x in range(n) for y in range(n) if e.labels[x] < e.labels[y])
    if tag == "HatTAge":
        if e.labels is None or any(l not in (0, 1) for l in e.labels):
            return False
        rank = e.rank
        for c in cols:
            if len(c) == 2:
                lo, hi = sorted(c, key=lambda v: rank[v])
                if e.labels[lo] != 0 or e.labels[hi] != 1:
                    return False
        return True
    if tag == "HatQAge":
        if e.labels is None:
            return False
        try:
            family = enumerate_expansions(spec, s)
        except DomainError:
            return False
        return any(f.key == e.key for f in family)
    return False


# relative and closed-form counts -------------------------------------------------

def expansion_arrays(exps: list, n: int) -> dict:
    """Rank, label and R-bit matrices of a list of plain expansions of one n-vertex structure."""
    import numpy as np

    first = exps[0]
    out = {}
    if first.order is not None:
        ranks = np.empty((len(exps), n), dtype=np.int64)
        for i, e in enumerate(exps):
            ranks[i, list(e.order)] = np.arange(n)
        out["ranks"] = ranks
    if first.labels is not None:
        out["labels"] = np.array([e.labels for e in exps], dtype=np.int64)
    if first.R is not None:
        bits = np.zeros((len(exps), n, n), dtype=np.int64)
        for i, e in enumerate(exps):
            for x, y in e.R:
                bits[i, x, y] = 1
        out["bits"] = bits
    out["count"] = len(exps)
    return out


def rows_from_arrays(arrays: dict, emb: Sequence[int]):
    """Integer rows encoding each expansion's restriction along ``emb``."""
    import numpy as np

    sub = list(emb)
    cols = []
    if "ranks" in arrays:
        cols.append(np.argsort(np.argsort(arrays["ranks"][:, sub], axis=1), axis=1))
    if "labels" in arrays:
        cols.append(arrays["labels"][:, sub])
    if "bits" in arrays:
        cols.append(arrays["bits"][:, sub][:, :, sub].reshape(arrays["count"], -1))
    if not cols:
        return np.zeros((arrays["count"], 1), dtype=np.int64)
    return np.concatenate(cols, axis=1)


def restriction_rows(exps: list, n: int, emb: Sequence[int]):
    """Integer rows encoding each plain expansion's restriction along ``emb`` (vectorised).

    Two expansions have equal rows exactly when their pullbacks along ``emb`` agree:
    the row holds the relative ranks of the image points, their labels and the R bits
    between them.
    """
    return rows_from_arrays(expansion_arrays(exps, n), emb)


def tally_rows(rows) -> dict:
    """Multiplicity of each distinct row, keyed by the row as a tuple."""
    import numpy as np

    if rows.shape[1] and rows.min() >= 0:
        bases = rows.max(axis=0) + 1
        if float(np.prod(bases.astype(float))) < 2.0 ** 62:
            weights = np.cumprod(np.concatenate(([1], bases[:-1])))
            codes = rows @ weights
            _, first, freq = np.unique(codes, return_index=True, return_counts=True)
            return {tuple(rows[i].tolist()): int(c) for i, c in zip(first, freq)}
    uniq, freq = np.unique(rows, axis=0, return_counts=True)
    return {tuple(row.tolist()): int(c) for row, c in zip(uniq, freq)}


@functools.lru_cache(maxsize=4)
def _expansions_of(spec: ClassSpec, b: FiniteStructure) -> list:
    return enumerate_expansions(spec, b)


@functools.lru_cache(maxsize=2)
def _arrays_of(spec: ClassSpec, b: FiniteStructure) -> dict:
    return expansion_arrays(_expansions_of(spec, b), b.n)


@functools.lru_cache(maxsize=64)
def _restriction_tally(spec: ClassSpec, b: FiniteStructure, emb: tuple) -> dict:
    """How many expansions of ``b`` restrict to each expansion of the substructure along ``emb``."""
    exps = _expansions_of(spec, b)
    if isinstance(exps[0], CompositeExpansion):
        sub = b.induced(list(emb))
        tally: dict = {}
        for e in exps:
            k = pullback(spec, e, emb, sub).key
            tally[k] = tally.get(k, 0) + 1
        return tally
    return tally_rows(rows_from_arrays(_arrays_of(spec, b), emb))


def count_relative_expansions(spec: ClassSpec, a_star, b: FiniteStructure, emb: Sequence[int]) -> int:
    """Number of expansions of ``b`` whose restriction along ``emb`` is ``a_star``."""
    a = a_star.base
    emb = tuple(int(v) for v in emb)
    if not is_embedding(a, b, emb):
        raise EmbeddingError("map is not an embedding of the expansion's base")
    tally = _restriction_tally(spec, b, emb)
    if isinstance(a_star, CompositeExpansion):
        return tally.get(a_star.key, 0)
    row = restriction_rows([a_star], a.n, range(a.n))[0]
    return tally.get(tuple(int(v) for v in row), 0)



def relative_count_table(spec: ClassSpec, a: FiniteStructure, b: FiniteStructure, emb: Sequence[int]) -> list:
    """Every expansion of ``a`` paired with its relative count in ``b`` along ``emb``."""
    emb = tuple(int(v) for v in emb)
    if not is_embedding(a, b, emb):
        raise EmbeddingError("map is not an embedding")
    tally = _restriction_tally(spec, b, emb)
    exps = _expansions_of(spec, a)
    if isinstance(exps[0], CompositeExpansion):
        return [(e, tally.get(e.key, 0)) for e in exps]
    rows = restriction_rows(exps, a.n, range(a.n)).tolist()
    return [(e, tally.get(tuple(row), 0)) for e, row in zip(exps, rows)]


def _falling(n: int, k: int) -> int:
    return math.perm(n, k) if 0 <= k <= n else 0


def closed_form_count(spec: ClassSpec, a: FiniteStructure, b: FiniteStructure, emb: Sequence[int] | None = None) -> Fraction:
    """The printed product formulas for the relative count of an expansion of ``a`` inside ``b``."""
    if emb is None:
        emb = next(iter_embeddings(a, b), None)
        if emb is None:
            raise EmbeddingError("a does not embed into b")
    elif not is_embedding(a, b, emb):
        raise EmbeddingError("map is not an embedding")
    tag = spec.tag
    if tag in LINEAR_TAGS:
        return Fraction(math.factorial(b.n), math.factorial(a.n))
    if tag not in ("DomegaAge", "DnAge", "HatTAge", "SemiGenericAge"):
        raise Unsupported(f"no closed form for {spec.name}")
    acols, awhere = column_index(a)
    bcols, bwhere = column_index(b)
    na, nb = len(acols), len(bcols)
    hit = {bwhere[emb[acols[k][0]]]: k for k in range(na)}
    if tag == "HatTAge":
        untouched = nb - len(hit)
        return Fraction(math.factorial(nb), math.factorial(na)) * 2 ** untouched
    if tag == "SemiGenericAge":
        top = math.factorial(nb) * 2 ** math.comb(nb, 2) * math.prod(math.factorial(len(c)) for c in bcols)
        bottom = math.factorial(na) * 2 ** math.comb(na, 2) * math.prod(math.factorial(len(c)) for c in acols)
        return Fraction(top, bottom)
    inner = Fraction(1)
    for i, col in enumerate(bcols):
        if i in hit:
            inner *= Fraction(math.factorial(len(col)), math.factorial(len(acols[hit[i]])))
        else:
            inner *= math.factorial(len(col))
    if tag == "DomegaAge":
        return Fraction(math.factorial(nb), math.factorial(na)) * inner
    # finite n: the b-a new classes take distinct unused names, in (n-a)!/(n-b)! ways
    n = spec.param
    return Fraction(math.factorial(n - na), math.factorial(n - nb)) * inner if nb <= n else Fraction(0)


def total_count_formula(spec: ClassSpec, a: FiniteStructure) -> int:
    """Closed form for the number of expansions of ``a`` itself."""
    tag = spec.tag
    if tag in LINEAR_TAGS:
        return math.factorial(a.n)
    cols = perp_partition(a)
    k = len(cols)
    sizes = math.prod(math.factorial(len(c)) for c in cols)
    if tag == "DomegaAge":
        return math.factorial(k) * sizes
    if tag == "DnAge":
        return _falling(spec.param, k) * sizes
    if tag == "HatTAge":
        return math.factorial(k) * 2 ** k
    if tag == "SemiGenericAge":
        return math.factorial(k) * 2 ** math.comb(k, 2) * sizes
    if tag == "HatQAge" and all(len(c) == 2 for c in cols):
        return 2 * k
    raise Unsupported(f"no closed form for {spec.name}")


# parity completion and transversals ------------------------------------------------

def complete_fourth_edge(col_x: Sequence[int], col_y: Sequence[int], arcs: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Orient the missing cross pair so that the arcs from ``col_x`` to ``col_y`` are even in number."""
    if len(col_x) != 2 or len(col_y) != 2 or set(col_x) & set(col_y):
        raise ConfigError("need two disjoint two-element columns")
    cross = {frozenset((x, y)) for x in col_x for y in col_y}
    given = [tuple(a) for a in arcs]
    if len(given) != 3:
        raise ConfigError("exactly three oriented cross pairs are required")
    pairs = [frozenset(a) for a in given]
    if len(set(pairs)) != 3 or any(p not in cross for p in pairs):
        raise ConfigError("arcs must be three distinct pairs between the two columns")
    (missing,) = cross - set(pairs)
    x = next(v for v in missing if v in col_x)
    y = next(v for v in missing if v in col_y)
    forward = sum(1 for u, _ in given if u in col_x)
    return (x, y) if forward % 2 == 1 else (y, x)


def amalgamate_transversal(a: FiniteStructure, column_order: Sequence[int] | None = None, seed: int = 0) -> FiniteStructure:
    """Extend ``a`` by one new point per column forming a linear tournament along ``column_order``.

    Column ``column_order[i]`` receives the new vertex ``a.n + i``.
    """
    cols, where = column_index(a)
    if not parity_ok(a, cols, where):
        raise DomainError("structure fails the parity condition")
    k = len(cols)
    corder = list(range(k)) if column_order is None else list(column_order)
    if sorted(corder) != list(range(k)):
        raise ConfigError("column_order must be a permutation of the columns")
    rng = random.Random(seed)
    pos = {c: i for i, c in enumerate(corder)}
    R = set()
    for i, j in itertools.combinations(range(k), 2):
        p, q = (i, j) if pos[i] < pos[j] else (j, i)
        bit = rng.randrange(2)
        x0, y0 = cols[p][0], cols[q][0]
        r_q = {x: (a.arc(x, y0) + bit) % 2 for x in cols[p]}
        for y in cols[q]:
            if (a.arc(x0, y) + r_q[x0]) % 2:
                R.update((x, y) for x in cols[p])
        for x in cols[p]:
            if r_q[x]:
                R.update((y, x) for y in cols[q])
    order = tuple(v for c in corder for v in cols[c])
    b = semi_generic_witness(Expansion(a, order, None, frozenset(R)))
    assert b is not None
    return b


# 2-covers: the Delta correspondence and the rotation isomorphisms ----------------

def delta(e: Expansion) -> FiniteStructure:
    """Ordered tournament on the columns of a full 2-cover expansion.

    Columns are numbered by the expansion order; for i < j the arc runs i -> j
    iff the I_0 point of column i points to the I_1 point of column j.
    """
    s = e.base
    cols, where = column_index(s)
    if any(len(c) != 2 for c in cols):
        raise DomainError("every column must have exactly two points")
    corder = []
    for v in e.order:
        if where[v] not in corder:
            corder.append(where[v])
    low = [next(v for v in cols[c] if e.labels[v] == 0) for c in corder]
    high = [next(v for v in cols[c] if e.labels[v] == 1) for c in corder]
    arcs = []
    for i, j in itertools.combinations(range(len(corder)), 2):
        arcs.append((i, j) if s.arc(low[i], high[j]) else (j, i))
    return FiniteStructure(len(corder), frozenset(arcs), order=tuple(range(len(corder))))


def delta_inverse(t: FiniteStructure) -> Expansion:
    """Blow up an ordered tournament into a full 2-cover expansion.

    Vertex ``2*i`` is the lower twin of ``t``'s i-th point (label I_0) and ``2*i + 1``
    the upper twin (label I_1).  Twins on the same level copy reversed arcs, twins on
    different levels copy arcs.
    """
    order = t.order if t.order is not None else tuple(range(t.n))
    arcs = []
    for x, y in itertools.permutations(range(t.n), 2):
        for lx in (0, 1):
            for ly in (0, 1):
                if (lx == ly and t.arc(y, x)) or (lx != ly and t.arc(x, y)):
                    arcs.append((2 * x + lx, 2 * y + ly))
    base = digraph(2 * t.n, arcs)
    full_order = tuple(2 * x + l for x in order for l in (0, 1))
    labels = tuple(v % 2 for v in range(2 * t.n))
    return Expansion(base, full_order, labels)


def qhat_standard(k: int) -> FiniteStructure:
    """The full 2-cover of the k-element linear tournament: vertex 2i is (i, C), 2i+1 is (i, P)."""
    arcs = []
    for i, j in itertools.permutations(range(k), 2):
        if i > j:
            arcs.append((2 * i, 2 * j))
            arcs.append((2 * i + 1, 2 * j + 1))
        else:
            arcs.append((2 * i + 1, 2 * j))
            arcs.append((2 * i, 2 * j + 1))
    return digraph(2 * k, arcs)


def _twisted_rotation(k: int, shift: int, flip: int) -> tuple[int, ...]:
    """(i, m) -> (i + shift, m xor flip) below the wrap, (i + shift - k, m xor flip xor 1) past it."""
    perm = [0] * (2 * k)
    for i in range(k):
        for m in (0, 1):
            j = i + shift
            if j < k:
                perm[2 * i + m] = 2 * j + (m ^ flip)
            else:
                perm[2 * i + m] = 2 * (j - k) + (m ^ flip ^ 1)
    return tuple(perm)


def _standard_coordinates(s: FiniteStructure) -> tuple[int, ...]:
    """An isomorphism from ``s`` onto ``qhat_standard(k)``."""
    cols, where = column_index(s)
    if any(len(c) != 2 for c in cols):
        raise DomainError("rotation isomorphisms need every column full")
    for reps in column_switchings(s, cols):
        sub = s.induced(reps)
        topo = topological_order(sub)
        if topo is None or not is_transitive(sub):
            continue
        k = len(cols)
        perm = [0] * s.n
        # in the standard form (i,C) -> (j,C) iff i > j, so list the sources last
        for idx, ci in enumerate(reversed(topo)):
            rep = reps[ci]
            twin = cols[ci][1] if cols[ci][0] == rep else cols[ci][0]
            perm[rep] = 2 * idx
            perm[twin] = 2 * idx + 1
        if s.relabel(perm) == qhat_standard(k):
            return tuple(perm)
    raise DomainError("structure is not a full 2-cover of a linear tournament")


def _rotation_to_base(std_e: Expansion, k: int) -> tuple[int, ...]:
    """The twisted rotation carrying ``std_e`` onto the all-C expansion of the standard structure."""
    spec = ClassSpec("HatQAge")
    target = _hat_q_reference(k)
    for shift in range(k):
        for flip in (0, 1):
            perm = _twisted_rotation(k, shift, flip)
            if act(spec, std_e, perm, std_e.base).key == target.key:
                return perm
    raise DomainError("no rotation carries the expansion to the reference one")


def _hat_q_reference(k: int) -> Expansion:
    s = qhat_standard(k)
    cols = [[2 * i, 2 * i + 1] for i in range(k)]
    for e in _hat_q_full_expansions(s, cols):
        if all(e.labels[2 * i] == 1 for i in range(k)):
            return e
    raise AssertionError("the all-C transversal is always linear")


def qhat_expansion_iso(e1: Expansion, e2: Expansion) -> tuple[int, ...]:
    """Automorphism of the common base carrying ``e1`` onto ``e2``, built from twisted rotations."""
    if e1.base != e2.base:
        raise DomainError("expansions live on different structures")
    s = e1.base
    spec = ClassSpec("HatQAge")
    coords = _standard_coordinates(s)
    k = s.n // 2
    std = qhat_standard(k)
    inv = [0] * s.n
    for v, w in enumerate(coords):
        inv[w] = v
    f1 = act(spec, e1, coords, std)
    f2 = act(spec, e2, coords, std)
    r1 = _rotation_to_base(f1, k)
    r2 = _rotation_to_base(f2, k)
    r2_inv = [0] * s.n
    for v, w in enumerate(r2):
        r2_inv[w] = v
    # s --coords--> std --r1--> std --r2^-1--> std --coords^-1--> s
    return tuple(inv[r2_inv[r1[coords[v]]]] for v in range(s.n))


def verify_expansion_iso(spec: ClassSpec, e1, e2, perm: Sequence[int]) -> bool:
    """Independent check that ``perm`` is an automorphism of the base carrying e1 to e2."""
    s = e1.base
    if sorted(perm) != list(range(s.n)):
        return False
    for x, y in itertools.permutations(range(s.n), 2):
        if s.arc(x, y) != e2.base.arc(perm[x], perm[y]):
            return False
    if e1.labels is not None and any(e1.labels[v] != e2.labels[perm[v]] for v in range(s.n)):
        return False
    if e1.order is not None:
        r1, r2 = e1.rank, e2.rank
        for x, y in itertools.permutations(range(s.n), 2):
            if (r1[x] < r1[y]) != (r2[perm[x]] < r2[perm[y]]):
                return False
    if e1.R is not None and {(perm[x], perm[y]) for x, y in e1.R} != set(e2.R):
        return False
    return True


# expansion property search ---------------------------------------------------------

def expansion_contains(spec: ClassSpec, big, small) -> bool:
    """Does the expanded ``small`` embed into the expanded ``big``?"""
    target = small.key
    for emb in iter_embeddings(small.base, big.base):
        if pullback(spec, big, emb, small.base).key == target:
            return True
    return False


def bounded_expansion_property_search(spec: ClassSpec, a: FiniteStructure, size_bound: int):
    """Smallest (by size, then canonical order) b in the age whose every expansion contains every expansion of a."""
    from .ages import iso_types

    if not validate_structure(a, spec):
        raise DomainError(f"structure is not in {spec.name}")
    small = enumerate_expansions(spec, a)
    for size in range(a.n, size_bound + 1):
        for b in iso_types(spec, size):
            if next(iter_embeddings(a, b), None) is None:
                continue
            if all(expansion_contains(spec, be, ae) for be in enumerate_expansions(spec, b) for ae in small):
                return b
    raise NotFound(f"no witness with at most {size_bound} vertices")
