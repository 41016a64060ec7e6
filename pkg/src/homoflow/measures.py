"""Exact-rational weight assignments on expansions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IncompleteMeasure
from .structures import ClassSpec, FiniteStructure, canonical_form


def expansion_type(e) -> tuple:
    """Isomorphism type of an expanded structure; invariant weights depend only on this."""
    from .expansion_classes import CompositeExpansion

    if isinstance(e, CompositeExpansion):
        order, labels = e.flatten()
        s = FiniteStructure(e.base.n, e.base.arcs, labels, e.relation(), order, e.base.classes)
        return canonical_form(s)
    return canonical_form(e.as_structure())


class RandomExpansionMeasure:
    """Base interface: ``weight(structure, expansion)`` returns a Fraction."""

    def weight(self, a: FiniteStructure, e) -> Fraction:
        raise NotImplementedError


@dataclass
class UniformMeasure(RandomExpansionMeasure):
    spec: ClassSpec
    _cache: dict = field(default_factory=dict, repr=False)

    def weight(self, a: FiniteStructure, e) -> Fraction:
        from .expansion_classes import count_expansions

        key = canonical_form(a)
        if key not in self._cache:
            self._cache[key] = count_expansions(self.spec, a)
        return Fraction(1, self._cache[key])


@dataclass
class TableMeasure(RandomExpansionMeasure):
    """Weights stored per isomorphism type of the expanded structure."""

    table: dict = field(default_factory=dict)

    def set(self, e, value) -> None:
        self.table[expansion_type(e)] = Fraction(value)

    def weight(self, a: FiniteStructure, e) -> Fraction:
        key = expansion_type(e)
        if key not in self.table:
            raise IncompleteMeasure(f"no weight recorded for an expansion of a {a.n}-vertex structure")
        return self.table[key]
