"""Built-in fragments reproducing the five classical non-amenability arguments."""
from __future__ import annotations

from .errors import ConfigError
from .expansion_classes import Expansion, qhat_standard
from .random_expansion_solver import Fragment
from .structures import ClassSpec, FiniteStructure, digraph


def _sector_fragment(sectors: int) -> Fragment:
    # x -> y; B adds b with x -> b -> y, C adds c with x -> c and y -> c
    a = digraph(2, [(0, 1)])
    b = digraph(3, [(0, 1), (0, 2), (2, 1)])
    c = digraph(3, [(0, 1), (0, 2), (1, 2)])
    a_star = Expansion(a, None, (0, 0))
    c_star = Expansion(c, None, (0, 0, 1))
    return Fragment(
        [a, b, c],
        [(0, 1, (0, 1)), (0, 2, (0, 1))],
        ["A", "B", "C"],
        focus=(2, c_star),
        named_expansions={"A*": (0, a_star), "C**": (2, c_star)},
    )


def s2_fragment() -> Fragment:
    return _sector_fragment(2)


def s3_fragment() -> Fragment:
    return _sector_fragment(3)


def poset_fragment() -> Fragment:
    # a < b with c incomparable to both; A = {a, c}, B = {b, c}
    c = digraph(3, [(0, 1)])
    a = digraph(2)
    a_star = Expansion(a, (0, 1))
    b_star = Expansion(a, (0, 1))
    c_one = Expansion(c, (0, 2, 1))
    return Fragment(
        [a, a, c],
        [(0, 2, (0, 2)), (1, 2, (1, 2))],
        ["A", "B", "C"],
        focus=(2, c_one),
        named_expansions={"A*": (0, a_star), "B*": (1, b_star), "C1": (2, c_one)},
    )


def p3_fragment() -> Fragment:
    # a -> b, c perpendicular to both; A = {a, c}, B = {b, c}
    c = digraph(3, [(0, 1)])
    a = digraph(2)
    a_star = Expansion(a, (0, 1), (0, 1))
    c_one = Expansion(c, (1, 2, 0), (1, 0, 1))
    return Fragment(
        [a, a, c],
        [(0, 2, (0, 2)), (1, 2, (1, 2))],
        ["A", "B", "C"],
        focus=(2, c_one),
        named_expansions={"A*": (0, a_star), "B*": (1, a_star), "C1": (2, c_one)},
    )


def qhat_fragment() -> Fragment:
    """Three full columns and the two-column substructure on the first two.

    Vertex ``2i`` is the C-twin and ``2i+1`` the P-twin of column ``i``.  The focus
    expansion of the small structure takes the C-twin of column 0 and the P-twin of
    column 1 as the lower-index points.
    """
    b = qhat_standard(3)
    a = b.induced([0, 1, 2, 3])
    a_star = Expansion(a, (0, 1, 3, 2), (1, 0, 0, 1))
    return Fragment(
        [a, b],
        [(0, 1, (0, 1, 2, 3))],
        ["A", "B"],
        focus=(0, a_star),
        named_expansions={"A*": (0, a_star)},
    )


BUILTINS = {
    "s2-thm51": ("s2", s2_fragment),
    "s3-thm51": ("s3", s3_fragment),
    "p-sec52": ("poset", poset_fragment),
    "p3-thm53": ("p3", p3_fragment),
    "qhat-thm54": ("hat-q", qhat_fragment),
}


def builtin(name: str) -> tuple[ClassSpec, Fragment]:
    try:
        tag, make = BUILTINS[name]
    except KeyError as exc:
        raise ConfigError(f"unknown built-in fragment {name!r}; choose from {sorted(BUILTINS)}") from exc
    return ClassSpec.parse(tag), make()
