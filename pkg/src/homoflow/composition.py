"""Blow-ups K[L]: composing, taking quotients, product measures and lifting partial isomorphisms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, NotACongruence, SignatureError, WitnessMismatch
from .expansion_classes import CompositeExpansion, class_members, part_of, quotient_of
from .measures import RandomExpansionMeasure
from .structures import ClassSpec, FiniteStructure, column_index, digraph, validate_structure


@dataclass(frozen=True)
class CompositeStructure:
    quotient: FiniteStructure
    classes: tuple
    flattening: FiniteStructure

    def to_json(self) -> dict:
        return {"quotient": self.quotient.to_json(), "classes": [c.to_json() for c in self.classes]}

    @classmethod
    def from_json(cls, data: dict) -> "CompositeStructure":
        return compose(FiniteStructure.from_json(data["quotient"]), [FiniteStructure.from_json(c) for c in data["classes"]])


def _plain(s: FiniteStructure) -> bool:
    return s.parts is None and s.R is None and s.order is None


def compose(q: FiniteStructure, parts: Sequence[FiniteStructure]) -> CompositeStructure:
    """Replace vertex ``i`` of ``q`` by a copy of ``parts[i]``; cross arcs copy the quotient arc."""
    if len(parts) != q.n:
        raise SignatureError(f"quotient has {q.n} vertices but {len(parts)} parts were given")
    if not _plain(q) or any(not _plain(p) for p in parts):
        raise SignatureError("composition is defined here for bare digraphs only")
    offsets = []
    total = 0
    for p in parts:
        offsets.append(total)
        total += p.n
    arcs = []
    classes = []
    for c, p in enumerate(parts):
        classes.extend([c] * p.n)
        arcs.extend((offsets[c] + x, offsets[c] + y) for x, y in p.arcs)
    for c, d in q.arcs:
        for x in range(parts[c].n):
            for y in range(parts[d].n):
                arcs.append((offsets[c] + x, offsets[d] + y))
    flat = FiniteStructure(total, frozenset(arcs), classes=tuple(classes))
    return CompositeStructure(q, tuple(p.reduct() for p in parts), flat)


def quotient_structure(c: FiniteStructure) -> FiniteStructure:
    """Quotient by the stored classes (or by perpendicularity when none are stored)."""
    if c.classes is None:
        cols, where = column_index(c)
        c = c.with_(classes=tuple(where))
    members = class_members(c)
    for a, b in itertools.permutations(range(len(members)), 2):
        kinds = {c.arc(x, y) for x in members[a] for y in members[b]}
        if len(kinds) != 1:
            raise NotACongruence(f"arcs between classes {a} and {b} are not uniform")
    return quotient_of(c)


def decompose(c: FiniteStructure) -> CompositeStructure:
    q = quotient_structure(c)
    return compose(q, [part_of(c, i) for i in range(q.n)])


def composite_member(s: FiniteStructure, spec: ClassSpec) -> bool:
    if s.classes is None:
        return False
    if sorted(set(s.classes)) != list(range(len(set(s.classes)))):
        return False
    try:
        q = quotient_structure(s)
    except NotACongruence:
        return False
    if not validate_structure(q, spec.left):
        return False
    return all(validate_structure(part_of(s, i), spec.right) for i in range(q.n))


def product_measure_eval(nu: RandomExpansionMeasure, mu: RandomExpansionMeasure, s, s_star: CompositeExpansion) -> Fraction:
    """Weight of ``s_star``: the quotient weight times the weights of the class expansions."""
    flat = s.flattening if isinstance(s, CompositeStructure) else s
    if s_star.base != flat:
        raise DomainError("expansion belongs to a different composite")
    value = mu.weight(quotient_of(flat), s_star.quotient)
    for i, pe in enumerate(s_star.parts):
        value *= nu.weight(part_of(flat, i), pe)
    return value


# lifting partial isomorphisms ---------------------------------------------------------

@dataclass
class FactorWitness:
    """A structure, an embedding of the original into it, and automorphisms keyed by map index.

    For the class factor, ``automorphisms`` is keyed by ``(map index, class index)``.
    ``embeddings`` holds one embedding per source structure (the quotient, or each class).
    """

    structure: FiniteStructure
    embeddings: list
    automorphisms: dict


def _is_automorphism(s: FiniteStructure, perm: Sequence[int]) -> bool:
    if sorted(perm) != list(range(s.n)):
        return False
    return all(s.arc(perm[x], perm[y]) for x, y in s.arcs) and len(s.arcs) == len({(perm[x], perm[y]) for x, y in s.arcs})


def project_partial_iso(s: FiniteStructure, pmap: dict) -> tuple[dict, dict]:
    """Split a class-preserving partial map into its quotient map and per-class maps."""
    members = class_members(s)
    pos = {}
    for c, verts in enumerate(members):
        for i, v in enumerate(verts):
            pos[v] = (c, i)
    qmap: dict = {}
    inner: dict = {}
    for x, y in pmap.items():
        cx, ix = pos[x]
        cy, iy = pos[y]
        if qmap.setdefault(cx, cy) != cy:
            raise DomainError("partial map does not respect the classes")
        inner.setdefault(cx, {})[ix] = iy
    return qmap, inner


def hrushovski_product_lift(s: FiniteStructure, partial_isos: Sequence[dict], k_witness: FactorWitness, l_witness: FactorWitness):
    """Blow the quotient witness up by the class witness and lift every map to an automorphism.

    Returns the composite witness, the embedding of ``s`` into it, and the lifted
    automorphisms, one per input map.
    """
    members = class_members(s)
    q = quotient_of(s)
    D, T = k_witness.structure, l_witness.structure
    (q_emb,) = k_witness.embeddings
    part_embs = l_witness.embeddings
    if len(part_embs) != len(members):
        raise WitnessMismatch("class witness needs one embedding per class")
    lifted = []
    projections = [project_partial_iso(s, p) for p in partial_isos]
    for i, (qmap, inner) in enumerate(projections):
        psi = k_witness.automorphisms.get(i)
        if psi is None or not _is_automorphism(D, psi):
            raise WitnessMismatch(f"no quotient automorphism for map {i}")
        for c, d in qmap.items():
            if psi[q_emb[c]] != q_emb[d]:
                raise WitnessMismatch(f"quotient automorphism {i} misses class {c}")
        for c, local in inner.items():
            chi = l_witness.automorphisms.get((i, c))
            if chi is None or not _is_automorphism(T, chi):
                raise WitnessMismatch(f"no class automorphism for map {i} on class {c}")
            d = qmap[c]
            for x, y in local.items():
                if chi[part_embs[c][x]] != part_embs[d][y]:
                    raise WitnessMismatch(f"class automorphism ({i},{c}) misses point {x}")
    big = compose(D, [T] * D.n).flattening
    m = T.n
    emb = [q_emb[c] * m + part_embs[c][i] for c, verts in enumerate(members) for i in range(len(verts))]
    order = [v for verts in members for v in verts]
    embedding = [0] * s.n
    for v, w in zip(order, emb):
        embedding[v] = w
    for i, (qmap, inner) in enumerate(projections):
        psi = k_witness.automorphisms[i]
        chis = {q_emb[c]: l_witness.automorphisms[(i, c)] for c in inner}
        perm = []
        for x in range(D.n):
            chi = chis.get(x)
            for t in range(m):
                perm.append(psi[x] * m + (chi[t] if chi is not None else t))
        lifted.append(tuple(perm))
    if q.n and any(not _is_automorphism(big, p) for p in lifted):
        raise WitnessMismatch("lifted map is not an automorphism")
    return big, tuple(embedding), lifted


def verify_lift(s: FiniteStructure, partial_isos: Sequence[dict], big: FiniteStructure, embedding, lifted) -> bool:
    """Independent check: each lift is an automorphism of ``big`` agreeing with its map through ``embedding``."""
    for pmap, perm in zip(partial_isos, lifted):
        if not _is_automorphism(big, perm):
            return False
        cls = big.classes
        for x in range(big.n):
            for y in range(big.n):
                if (cls[x] == cls[y]) != (cls[perm[x]] == cls[perm[y]]):
                    return False
        for x, y in pmap.items():
            if perm[embedding[x]] != embedding[y]:
                return False
    return True
