"""Isomorphism types of an age, grown one vertex at a time."""
from __future__ import annotations

import itertools
from functools import lru_cache

from .errors import Unsupported
from .structures import ClassSpec, FiniteStructure, canonical_form, canonical_relabel, digraph, validate_structure


@lru_cache(maxsize=None)
def iso_types(spec: ClassSpec, n: int) -> tuple[FiniteStructure, ...]:
    """One canonically labelled representative per isomorphism type with ``n`` vertices."""
    if spec.tag in ("TreeLeafAge", "OrderedTreeLeafAge"):
        raise Unsupported("leaf structures are enumerated by the trees module")
    if spec.tag == "Composition":
        return _composite_types(spec, n)
    if n == 0:
        return (FiniteStructure(0),)
    found: dict = {}
    for prev in iso_types(spec, n - 1):
        v = n - 1
        for pattern in itertools.product((0, 1, 2), repeat=n - 1):
            arcs = set(prev.arcs)
            for u, p in enumerate(pattern):
                if p == 1:
                    arcs.add((u, v))
                elif p == 2:
                    arcs.add((v, u))
            s = digraph(n, arcs)
            if not validate_structure(s, spec):
                continue
            key = canonical_form(s)
            if key not in found:
                found[key] = canonical_relabel(s)
    return tuple(found[k] for k in sorted(found))


def _partitions(n: int, k: int):
    """Ordered tuples of k positive sizes summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _partitions(n - first, k - 1):
            yield (first,) + rest


def _composite_types(spec: ClassSpec, n: int) -> tuple[FiniteStructure, ...]:
    from .composition import compose

    if n == 0:
        return (FiniteStructure(0, classes=()),)
    found: dict = {}
    for k in range(1, n + 1):
        for q in iso_types(spec.left, k):
            for sizes in _partitions(n, k):
                for parts in itertools.product(*(iso_types(spec.right, m) for m in sizes)):
                    flat = compose(q, list(parts)).flattening
                    key = canonical_form(flat)
                    if key not in found:
                        found[key] = canonical_relabel(flat)
    return tuple(found[k] for k in sorted(found))


def age_up_to(spec: ClassSpec, bound: int) -> list[FiniteStructure]:
    out: list[FiniteStructure] = []
    for n in range(1, bound + 1):
        out.extend(iso_types(spec, n))
    return out
