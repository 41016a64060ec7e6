"""Finite digraphs with optional decorations, embeddings, isomorphism and age membership.

Vertices are the integers ``0 .. n-1``.  A structure carries the arc relation and,
optionally, a per-vertex part label, an auxiliary binary relation ``R``, a linear
order (listed smallest first) and an explicit equivalence ``classes`` used by
composite structures.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .errors import (
    BoundExceeded,
    ConfigError,
    MalformedStructure,
    NotAnEquivalence,
    Unsupported,
)

ISO_VERTEX_BOUND = 10


def max_vertices() -> int:
    """Enumeration cap, overridable through ``HOMOFLOW_MAX_VERTICES``."""
    raw = os.environ.get("HOMOFLOW_MAX_VERTICES", "8")
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"HOMOFLOW_MAX_VERTICES must be an integer, got {raw!r}") from exc


@dataclass(frozen=True, eq=True)
class FiniteStructure:
    n: int
    arcs: frozenset = frozenset()
    parts: tuple | None = None
    R: frozenset | None = None
    order: tuple | None = None
    classes: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "arcs", frozenset((int(x), int(y)) for x, y in self.arcs))
        if self.R is not None:
            object.__setattr__(self, "R", frozenset((int(x), int(y)) for x, y in self.R))
        if self.parts is not None:
            object.__setattr__(self, "parts", tuple(self.parts))
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(v) for v in self.order))
        if self.classes is not None:
            object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        self._check()

    def _check(self) -> None:
        n = self.n
        if n < 0:
            raise MalformedStructure("negative vertex count")
        for x, y in self.arcs:
            if not (0 <= x < n and 0 <= y < n):
                raise MalformedStructure(f"arc ({x},{y}) leaves the universe")
            if x == y:
                raise MalformedStructure(f"loop at {x}")
            if (y, x) in self.arcs:
                raise MalformedStructure(f"both ({x},{y}) and ({y},{x}) present")
        if self.order is not None and sorted(self.order) != list(range(n)):
            raise MalformedStructure("order is not a permutation of the universe")
        if self.parts is not None and len(self.parts) != n:
            raise MalformedStructure("parts must label every vertex")
        if self.classes is not None and len(self.classes) != n:
            raise MalformedStructure("classes must label every vertex")
        if self.R is not None:
            for x, y in self.R:
                if not (0 <= x < n and 0 <= y < n):
                    raise MalformedStructure(f"R pair ({x},{y}) leaves the universe")
                if x == y or ((x, y) not in self.arcs and (y, x) not in self.arcs):
                    raise MalformedStructure(f"R relates perpendicular pair ({x},{y})")

    # adjacency ---------------------------------------------------------------
    @cached_property
    def out_masks(self) -> tuple:
        masks = [0] * self.n
        for x, y in self.arcs:
            masks[x] |= 1 << y
        return tuple(masks)

    @cached_property
    def in_masks(self) -> tuple:
        masks = [0] * self.n
        for x, y in self.arcs:
            masks[y] |= 1 << x
        return tuple(masks)

    @cached_property
    def perp_masks(self) -> tuple:
        full = (1 << self.n) - 1
        return tuple(full & ~(self.out_masks[v] | self.in_masks[v]) & ~(1 << v) for v in range(self.n))

    def arc(self, x: int, y: int) -> bool:
        return (self.out_masks[x] >> y) & 1 == 1

    def perp(self, x: int, y: int) -> bool:
        return x != y and not self.arc(x, y) and not self.arc(y, x)

    @property
    def vertices(self) -> range:
        return range(self.n)

    @cached_property
    def rank(self) -> tuple | None:
        if self.order is None:
            return None
        pos = [0] * self.n
        for i, v in enumerate(self.order):
            pos[v] = i
        return tuple(pos)

    # derived structures -------------------------------------------------------
    def induced(self, verts: Sequence[int]) -> "FiniteStructure":
        """Substructure on ``verts``, relabelled so that ``verts[i]`` becomes ``i``."""
        idx = {v: i for i, v in enumerate(verts)}
        arcs = [(idx[x], idx[y]) for x, y in self.arcs if x in idx and y in idx]
        R = None if self.R is None else [(idx[x], idx[y]) for x, y in self.R if x in idx and y in idx]
        parts = None if self.parts is None else [self.parts[v] for v in verts]
        order = None if self.order is None else [idx[v] for v in self.order if v in idx]
        classes = None
        if self.classes is not None:
            seen: dict[int, int] = {}
            classes = []
            for v in verts:
                seen.setdefault(self.classes[v], len(seen))
                classes.append(seen[self.classes[v]])
        return FiniteStructure(len(verts), frozenset(arcs), parts, None if R is None else frozenset(R), order, classes)

    def relabel(self, perm: Sequence[int]) -> "FiniteStructure":
        """Image under the bijection ``v -> perm[v]``."""
        arcs = frozenset((perm[x], perm[y]) for x, y in self.arcs)
        R = None if self.R is None else frozenset((perm[x], perm[y]) for x, y in self.R)
        parts = None
        if self.parts is not None:
            p = [None] * self.n
            for v in range(self.n):
                p[perm[v]] = self.parts[v]
            parts = tuple(p)
        order = None if self.order is None else tuple(perm[v] for v in self.order)
        classes = None
        if self.classes is not None:
            c = [0] * self.n
            for v in range(self.n):
                c[perm[v]] = self.classes[v]
            classes = tuple(c)
        return FiniteStructure(self.n, arcs, parts, R, order, classes)

    def reduct(self) -> "FiniteStructure":
        """The bare digraph."""
        return FiniteStructure(self.n, self.arcs)

    def with_(self, **changes) -> "FiniteStructure":
        data = dict(n=self.n, arcs=self.arcs, parts=self.parts, R=self.R, order=self.order, classes=self.classes)
        data.update(changes)
        return FiniteStructure(**data)

    # serialization ------------------------------------------------------------
    def to_json(self) -> dict:
        out: dict = {"n": self.n, "arcs": sorted([list(a) for a in self.arcs])}
        if self.parts is not None:
            out["parts"] = {str(v): self.parts[v] for v in range(self.n)}
        if self.R is not None:
            out["R"] = sorted([list(a) for a in self.R])
        if self.order is not None:
            out["order"] = list(self.order)
        if self.classes is not None:
            out["classes"] = list(self.classes)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FiniteStructure":
        if not isinstance(data, dict) or "n" not in data:
            raise MalformedStructure("structure JSON needs an 'n' field")
        n = int(data["n"])
        parts = None
        if data.get("parts") is not None:
            raw = data["parts"]
            if isinstance(raw, dict):
                parts = tuple(raw.get(str(v), raw.get(v)) for v in range(n))
            else:
                parts = tuple(raw)
        R = None if data.get("R") is None else frozenset(tuple(p) for p in data["R"])
        return cls(
            n,
            frozenset(tuple(p) for p in data.get("arcs", [])),
            parts,
            R,
            None if data.get("order") is None else tuple(data["order"]),
            None if data.get("classes") is None else tuple(data["classes"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# constructors -----------------------------------------------------------------

def digraph(n: int, arcs: Iterable[tuple[int, int]] = ()) -> FiniteStructure:
    return FiniteStructure(n, frozenset(arcs))


def edgeless(n: int) -> FiniteStructure:
    return FiniteStructure(n)


def cycle(n: int) -> FiniteStructure:
    return digraph(n, [(i, (i + 1) % n) for i in range(n)])


def linear_tournament(n: int) -> FiniteStructure:
    """Transitive tournament with ``i -> j`` iff ``i < j``."""
    return digraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def multipartite(sizes: Sequence[int], arc_rule) -> FiniteStructure:
    """Columns of the given sizes; ``arc_rule(x, y)`` orients each cross pair (True means x -> y)."""
    cols = []
    v = 0
    for s in sizes:
        cols.append(list(range(v, v + s)))
        v += s
    arcs = []
    for i, j in itertools.combinations(range(len(cols)), 2):
        for x in cols[i]:
            for y in cols[j]:
                arcs.append((x, y) if arc_rule(x, y) else (y, x))
    return digraph(v, arcs)


# class specifications ----------------------------------------------------------

TAGS = {
    "Tournaments", "QAge", "S2Age", "S3Age", "PosetAge", "P3Age", "DnAge", "DomegaAge",
    "HatTAge", "HatQAge", "SemiGenericAge", "GnAge", "FTAge", "EdgelessAge",
    "Composition", "TreeLeafAge", "OrderedTreeLeafAge",
}

_ALIASES = {
    "tournaments": "Tournaments", "t-omega": "Tournaments", "tournament": "Tournaments",
    "q": "QAge", "linear": "QAge",
    "s2": "S2Age", "s3": "S3Age",
    "p": "PosetAge", "poset": "PosetAge",
    "p3": "P3Age",
    "d-omega": "DomegaAge", "domega": "DomegaAge",
    "hat-t": "HatTAge", "hatt": "HatTAge",
    "hat-q": "HatQAge", "hatq": "HatQAge",
    "s": "SemiGenericAge", "semi-generic": "SemiGenericAge", "semigeneric": "SemiGenericAge",
    "edgeless": "EdgelessAge", "i": "EdgelessAge",
    "tree-leaf": "TreeLeafAge", "ordered-tree-leaf": "OrderedTreeLeafAge",
}

NAMED_TOURNAMENTS = {"c3": cycle(3), "l3": linear_tournament(3)}


@dataclass(frozen=True)
class ClassSpec:
    tag: str
    param: int | None = None
    forbidden: tuple = ()
    left: "ClassSpec | None" = None
    right: "ClassSpec | None" = None
    forbidden_names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigError(f"unknown class tag {self.tag!r}")
        if self.tag == "GnAge" and (self.param is None or self.param < 2):
            raise ConfigError("GnAge needs a parameter n >= 2")
        if self.tag == "DnAge" and (self.param is None or self.param < 1):
            raise ConfigError("DnAge needs a parameter n >= 1")
        if self.tag == "FTAge":
            if not self.forbidden:
                raise ConfigError("FTAge needs at least one forbidden tournament")
            for t in self.forbidden:
                if t.n < 3 or not is_tournament(t):
                    raise ConfigError("forbidden structures must be tournaments on at least three vertices")
        if self.tag == "Composition" and (self.left is None or self.right is None):
            raise ConfigError("Composition needs two component classes")

    @property
    def name(self) -> str:
        if self.tag in ("DnAge", "GnAge"):
            return f"{self.tag}({self.param})"
        if self.tag == "FTAge":
            names = self.forbidden_names or tuple(f"T{t.n}" for t in self.forbidden)
            return f"FTAge({','.join(names)})"
        if self.tag == "Composition":
            return f"Composition({self.left.name},{self.right.name})"
        return self.tag

    @classmethod
    def parse(cls, text: str) -> "ClassSpec":
        raw = text.strip()
        low = raw.lower()
        if low.startswith("comp(") and low.endswith(")"):
            inner = raw[5:-1]
            depth = 0
            for i, ch in enumerate(inner):
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                elif ch == "," and depth == 0:
                    return cls("Composition", left=cls.parse(inner[:i]), right=cls.parse(inner[i + 1:]))
            raise ConfigError(f"cannot split composition {text!r}")
        if raw in TAGS and raw not in ("DnAge", "GnAge", "FTAge", "Composition"):
            return cls(raw)
        if low in _ALIASES:
            return cls(_ALIASES[low])
        for prefix, tag in (("dn:", "DnAge"), ("gn:", "GnAge"), ("d", "DnAge"), ("g", "GnAge")):
            rest = low[len(prefix):]
            if low.startswith(prefix) and rest.isdigit():
                return cls(tag, param=int(rest))
        if low.startswith("ft:") or low.startswith("f:"):
            names = tuple(x.strip() for x in low.split(":", 1)[1].split(",") if x.strip())
            try:
                forb = tuple(NAMED_TOURNAMENTS[x] for x in names)
            except KeyError as exc:
                raise ConfigError(f"unknown forbidden tournament {exc.args[0]!r}") from exc
            return cls("FTAge", forbidden=forb, forbidden_names=names)
        raise ConfigError(f"unknown class {text!r}")


# basic predicates --------------------------------------------------------------

def is_tournament(s: FiniteStructure) -> bool:
    return len(s.arcs) == s.n * (s.n - 1) // 2


def is_transitive(s: FiniteStructure) -> bool:
    out = s.out_masks
    for x in range(s.n):
        m = out[x]
        y = 0
        while m:
            if m & 1 and out[y] & ~out[x]:
                return False
            m >>= 1
            y += 1
    return True


def topological_order(s: FiniteStructure) -> list[int] | None:
    """A linear order with ``x -> y`` implying x before y, or None if the arcs contain a cycle."""
    indeg = [bin(m).count("1") for m in s.in_masks]
    ready = [v for v in range(s.n) if indeg[v] == 0]
    out = []
    while ready:
        ready.sort()
        v = ready.pop(0)
        out.append(v)
        for w in range(s.n):
            if s.arc(v, w):
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
    return out if len(out) == s.n else None


def perp_partition(s: FiniteStructure) -> list[list[int]]:
    """Classes of the no-arc relation (each vertex is perpendicular to itself)."""
    seen = 0
    classes = []
    for v in range(s.n):
        if (seen >> v) & 1:
            continue
        members = s.perp_masks[v] | (1 << v)
        cls = [w for w in range(s.n) if (members >> w) & 1]
        for w in cls:
            if (s.perp_masks[w] | (1 << w)) != members:
                raise NotAnEquivalence(f"perpendicularity is not transitive around vertex {w}")
        seen |= members
        classes.append(cls)
    return classes


def column_index(s: FiniteStructure) -> tuple[list[list[int]], list[int]]:
    cols = perp_partition(s)
    where = [0] * s.n
    for i, c in enumerate(cols):
        for v in c:
            where[v] = i
    return cols, where


def _perp_equivalence(s: FiniteStructure):
    try:
        return column_index(s)
    except NotAnEquivalence:
        return None


# sector model for the weak local orders ---------------------------------------

def sector_comparisons(s: FiniteStructure, labels: Sequence[int], sectors: int) -> list[tuple[int, int]] | None:
    """Pairs (u, v) meaning u's offset inside its sector is below v's.

    Returns None when the labelling cannot produce the arcs of ``s`` at all.
    Points sit on the circle at angle ``2*pi*(label + offset)/sectors`` with offset
    in (0, 1); an arc runs from a point to every point less than one sector ahead.
    """
    less = []
    for x, y in itertools.combinations(range(s.n), 2):
        sx, sy = labels[x] % sectors, labels[y] % sectors
        xy, yx = s.arc(x, y), s.arc(y, x)
        if sx == sy:
            if xy:
                less.append((x, y))
            elif yx:
                less.append((y, x))
            else:
                return None
            continue
        if sectors == 2:
            # y sits half a turn away: x -> y iff y's offset is below x's
            if xy:
                less.append((y, x))
            elif yx:
                less.append((x, y))
            else:
                return None
            continue
        if (sx + 1) % sectors == sy:
            u, v = x, y
        elif (sy + 1) % sectors == sx:
            u, v = y, x
        else:
            if xy or yx:
                return None
            continue
        # v is one sector ahead of u
        if s.arc(u, v):
            less.append((v, u))
        elif s.arc(v, u):
            return None
        else:
            less.append((u, v))
    return less


def comparisons_acyclic(n: int, less: Iterable[tuple[int, int]]) -> bool:
    return topological_order(FiniteStructure(n, frozenset(less))) is not None


def sector_labelling_valid(s: FiniteStructure, labels: Sequence[int], sectors: int) -> bool:
    less = sector_comparisons(s, labels, sectors)
    return less is not None and comparisons_acyclic(s.n, less)


def _in_sector_age(s: FiniteStructure, sectors: int) -> bool:
    if s.n == 0:
        return True
    # rotating by a whole sector is an automorphism, so vertex 0 may sit in sector 0
    for rest in itertools.product(range(sectors), repeat=s.n - 1):
        if sector_labelling_valid(s, (0,) + rest, sectors):
            return True
    return False


# twisted poset -------------------------------------------------------------------

def untwist(s: FiniteStructure, parts: Sequence[int]) -> FiniteStructure | None:
    """The strict order recovered from arcs and a three-part labelling, or None if impossible."""
    less = []
    for x, y in itertools.combinations(range(s.n), 2):
        px, py = parts[x] % 3, parts[y] % 3
        if px == py:
            if s.arc(x, y):
                less.append((x, y))
            elif s.arc(y, x):
                less.append((y, x))
            continue
        if (px + 1) % 3 == py:
            u, v = x, y
        else:
            u, v = y, x
        # v lies in the part after u's
        if s.arc(u, v):
            less.append((v, u))
        elif s.arc(v, u):
            pass
        else:
            less.append((u, v))
    out = FiniteStructure(s.n, frozenset(less))
    return out if is_transitive(out) else None


def _in_p3_age(s: FiniteStructure) -> bool:
    if s.n == 0:
        return True
    for rest in itertools.product(range(3), repeat=s.n - 1):
        if untwist(s, (0,) + rest) is not None:
            return True
    return False


# covers and multipartite ages ------------------------------------------------------

def _cover_pattern_ok(s: FiniteStructure, cols, where) -> bool:
    if any(len(c) > 2 for c in cols):
        return False
    for c in cols:
        if len(c) != 2:
            continue
        a, a2 = c
        for b in range(s.n):
            if where[b] == where[a]:
                continue
            if s.arc(a, b) != s.arc(b, a2):
                return False
    return True


def column_switchings(s: FiniteStructure, cols) -> Iterator[list[int]]:
    """Every choice of one representative per column.

    When all columns are full, swapping every representative gives an isomorphic
    induced tournament, so the first column can be pinned; with a singleton column
    present that symmetry is gone.
    """
    pin = all(len(c) == 2 for c in cols)
    choices = [c[:1] if pin and i == 0 else c for i, c in enumerate(cols)]
    yield from (list(t) for t in itertools.product(*choices))


def hat_completion(s: FiniteStructure) -> tuple[FiniteStructure, list[list[int]]]:
    """Add a twin to every singleton column; returns the full structure and its columns."""
    cols, where = column_index(s)
    arcs = set(s.arcs)
    n = s.n
    full_cols = []
    for c in cols:
        if len(c) == 2:
            full_cols.append(list(c))
            continue
        z, twin = c[0], n
        for u in range(n):
            if u == z or u in c:
                continue
            if (u, z) in arcs:
                arcs.add((twin, u))
            else:
                arcs.add((u, twin))
        n += 1
        full_cols.append([z, twin])
    return digraph(n, arcs), full_cols


def _hat_q_ok(s: FiniteStructure) -> bool:
    """A singleton column may stand for either twin, so test the completed cover."""
    full, cols = hat_completion(s)
    return any(is_transitive(full.induced(reps)) for reps in column_switchings(full, cols))


def parity_ok(s: FiniteStructure, cols, where) -> bool:
    """Even number of arcs from {x, x'} to {y, y'} for perpendicular pairs in distinct columns."""
    for i, j in itertools.combinations(range(len(cols)), 2):
        for x, x2 in itertools.combinations(cols[i], 2):
            for y, y2 in itertools.combinations(cols[j], 2):
                count = s.arc(x, y) + s.arc(x, y2) + s.arc(x2, y) + s.arc(x2, y2)
                if count % 2:
                    return False
    return True


def has_independent_set(s: FiniteStructure, size: int) -> bool:
    perp = s.perp_masks

    def grow(cands: int, need: int) -> bool:
        if need == 0:
            return True
        while cands:
            if bin(cands).count("1") < need:
                return False
            v = cands.bit_length() - 1
            cands &= ~(1 << v)
            if grow(cands & perp[v], need - 1):
                return True
        return False

    return grow((1 << s.n) - 1, size)


# membership ----------------------------------------------------------------------

def validate_structure(s: FiniteStructure, spec: ClassSpec) -> bool:
    """True iff ``s`` (as a bare digraph, plus classes for compositions) lies in the age."""
    tag = spec.tag
    if tag == "Tournaments":
        return is_tournament(s)
    if tag == "QAge":
        return is_tournament(s) and is_transitive(s)
    if tag == "EdgelessAge":
        return not s.arcs
    if tag == "S2Age":
        return is_tournament(s) and _in_sector_age(s, 2)
    if tag == "S3Age":
        return _in_sector_age(s, 3)
    if tag == "PosetAge":
        return is_transitive(s)
    if tag == "P3Age":
        return _in_p3_age(s)
    if tag == "GnAge":
        return not has_independent_set(s, spec.param + 1)
    if tag == "FTAge":
        return not any(has_embedding(t, s) for t in spec.forbidden)
    if tag == "Composition":
        from .composition import composite_member
        return composite_member(s, spec)
    if tag in ("TreeLeafAge", "OrderedTreeLeafAge"):
        raise Unsupported("leaf structures are handled by the trees module")
    ci = _perp_equivalence(s)
    if ci is None:
        return False
    cols, where = ci
    if tag == "DomegaAge":
        return True
    if tag == "DnAge":
        return len(cols) <= spec.param
    if tag == "HatTAge":
        return _cover_pattern_ok(s, cols, where)
    if tag == "HatQAge":
        return _cover_pattern_ok(s, cols, where) and _hat_q_ok(s)
    if tag == "SemiGenericAge":
        return parity_ok(s, cols, where)
    raise Unsupported(f"no membership test for {tag}")


# pair codes, embeddings, isomorphism -----------------------------------------------

def signature(s: FiniteStructure) -> tuple[bool, bool, bool, bool]:
    return (s.parts is not None, s.R is not None, s.order is not None, s.classes is not None)


def pair_code_matrix(s: FiniteStructure, sig: tuple[bool, bool, bool, bool] | None = None) -> list[list[int]]:
    """Integer code per ordered pair recording every relation named in ``sig``."""
    use_parts, use_R, use_order, use_classes = sig if sig is not None else signature(s)
    rank = s.rank if use_order else None
    R = s.R if use_R else None
    n = s.n
    mat = [[0] * n for _ in range(n)]
    for x in range(n):
        row = mat[x]
        for y in range(n):
            if x == y:
                continue
            code = s.arc(x, y) | (s.arc(y, x) << 1)
            if R is not None:
                code |= ((x, y) in R) << 2 | ((y, x) in R) << 3
            if rank is not None:
                code |= (rank[x] < rank[y]) << 4
            if use_classes:
                code |= (s.classes[x] == s.classes[y]) << 5
            row[y] = code
    return mat


def vertex_codes(s: FiniteStructure, sig=None) -> list:
    use_parts = (sig if sig is not None else signature(s))[0]
    if use_parts:
        return [repr(p) for p in s.parts]
    return [""] * s.n


def _require_signature(a: FiniteStructure, b: FiniteStructure) -> tuple:
    sa, sb = signature(a), signature(b)
    for need, have in zip(sa, sb):
        if need and not have:
            from .errors import SignatureError
            raise SignatureError("target structure lacks a relation carried by the source")
    return sa


def iter_embeddings(a: FiniteStructure, b: FiniteStructure) -> Iterator[tuple[int, ...]]:
    """All maps preserving and reflecting every relation carried by ``a``."""
    sig = _require_signature(a, b)
    ma, mb = pair_code_matrix(a, sig), pair_code_matrix(b, sig)
    va, vb = vertex_codes(a, sig), vertex_codes(b, sig)
    n, m = a.n, b.n
    image = [0] * n
    used = [False] * m

    def extend(i: int):
        if i == n:
            yield tuple(image)
            return
        row = ma[i]
        for j in range(m):
            if used[j] or va[i] != vb[j]:
                continue
            ok = True
            for p in range(i):
                q = image[p]
                if ma[p][i] != mb[q][j] or row[p] != mb[j][q]:
                    ok = False
                    break
            if ok:
                used[j] = True
                image[i] = j
                yield from extend(i + 1)
                used[j] = False

    yield from extend(0)


def enumerate_embeddings(a: FiniteStructure, b: FiniteStructure) -> list[tuple[int, ...]]:
    return list(iter_embeddings(a, b))


def count_embeddings(a: FiniteStructure, b: FiniteStructure) -> int:
    return sum(1 for _ in iter_embeddings(a, b))


def has_embedding(a: FiniteStructure, b: FiniteStructure) -> bool:
    return next(iter_embeddings(a, b), None) is not None


def is_embedding(a: FiniteStructure, b: FiniteStructure, emb: Sequence[int]) -> bool:
    if len(emb) != a.n or len(set(emb)) != a.n or any(not (0 <= v < b.n) for v in emb):
        return False
    sig = _require_signature(a, b)
    ma, mb = pair_code_matrix(a, sig), pair_code_matrix(b, sig)
    va, vb = vertex_codes(a, sig), vertex_codes(b, sig)
    for i in range(a.n):
        if va[i] != vb[emb[i]]:
            return False
        for j in range(a.n):
            if i != j and ma[i][j] != mb[emb[i]][emb[j]]:
                return False
    return True


def _refined_colours(s: FiniteStructure, mat, vcodes) -> list[int]:
    n = s.n
    colours = vcodes[:]
    keys = sorted(set(colours))
    colours = [keys.index(c) for c in colours]
    while True:
        sigs = [(colours[v], tuple(sorted((colours[u], mat[v][u], mat[u][v]) for u in range(n) if u != v))) for v in range(n)]
        keys = sorted(set(sigs))
        new = [keys.index(sg) for sg in sigs]
        if len(keys) == len(set(colours)):
            return new
        colours = new


def _canonical_search(s: FiniteStructure):
    n = s.n
    if n > ISO_VERTEX_BOUND:
        raise BoundExceeded(f"isomorphism search limited to {ISO_VERTEX_BOUND} vertices, got {n}")
    mat = pair_code_matrix(s)
    vcodes = vertex_codes(s)
    colours = _refined_colours(s, mat, vcodes)
    slots = sorted(range(n), key=lambda v: colours[v])
    slot_colour = [colours[v] for v in slots]
    best: list = [None, None]
    placed: list[int] = []
    used = [False] * n
    code: list = []

    def rec(p: int, smaller: bool):
        # smaller: the current prefix is already strictly below the best prefix
        if p == n:
            if best[0] is None or code < best[0]:
                best[0] = list(code)
                best[1] = list(placed)
            return
        want = slot_colour[p]
        for v in range(n):
            if used[v] or colours[v] != want:
                continue
            start = len(code)
            code.extend(mat[v][placed[q]] for q in range(p))
            code.extend(mat[placed[q]][v] for q in range(p))
            now_smaller = smaller
            if best[0] is not None and not smaller:
                ref = best[0][: len(code)]
                if code > ref:
                    del code[start:]
                    continue
                now_smaller = code < ref
            used[v] = True
            placed.append(v)
            rec(p + 1, now_smaller)
            placed.pop()
            used[v] = False
            del code[start:]

    rec(0, False)
    header = tuple(vcodes[v] for v in best[1])
    return (n, header, tuple(best[0])), best[1]


def canonical_form(s: FiniteStructure) -> tuple:
    """Encoding equal for two structures iff they are isomorphic (same signature assumed)."""
    return (signature(s),) + _canonical_search(s)[0]


def canonical_labelling(s: FiniteStructure) -> list[int]:
    """``result[i]`` is the vertex of ``s`` placed at canonical position ``i``."""
    return _canonical_search(s)[1]


def canonical_relabel(s: FiniteStructure) -> FiniteStructure:
    lab = canonical_labelling(s)
    perm = [0] * s.n
    for i, v in enumerate(lab):
        perm[v] = i
    return s.relabel(perm)


def is_isomorphic(a: FiniteStructure, b: FiniteStructure) -> bool:
    if a.n != b.n or signature(a) != signature(b) or len(a.arcs) != len(b.arcs):
        return False
    return canonical_form(a) == canonical_form(b)


def find_isomorphism(a: FiniteStructure, b: FiniteStructure) -> tuple[int, ...] | None:
    if a.n != b.n or signature(a) != signature(b):
        return None
    return next(iter_embeddings(a, b), None)


def automorphisms(s: FiniteStructure) -> list[tuple[int, ...]]:
    return enumerate_embeddings(s, s)
