"""Dense two-phase simplex over exact rationals (Dantzig pricing, Bland's rule against cycling).

Solves ``max c.x  s.t.  A x = b, x >= 0`` exactly and returns dual multipliers
that certify the outcome:

* infeasible: ``y`` with ``y.A >= 0`` componentwise and ``y.b < 0``;
* optimal: ``y`` with ``y.A >= c`` componentwise and ``y.b`` equal to the optimum.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

ZERO = mpq(0)
ONE = mpq(1)


def _q(v) -> mpq:
    v = Fraction(v)
    return mpq(v.numerator, v.denominator)


def _f(v: mpq) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


@dataclass
class LPResult:
    status: str
    x: list | None
    value: Fraction | None
    dual: list | None


def _pivot(T: list[list[mpq]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != ONE:
        inv = ONE / p
        T[r] = row = [v * inv if v else v for v in row]
    nz = [j for j, v in enumerate(row) if v]
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[c]
        if f:
            for j in nz:
                other[j] -= f * row[j]
    basis[r] = c


def _optimize(T, basis, cost, allowed: list[bool]) -> str:
    m = len(T)
    ncols = len(cost)
    stalled = 0
    while True:
        basis_set = set(basis)
        red = list(cost[:ncols])
        for i in range(m):
            cb = cost[basis[i]]
            if cb:
                row = T[i]
                for j in range(ncols):
                    v = row[j]
                    if v:
                        red[j] -= cb * v
        # largest reduced cost, with Bland's smallest index once progress stalls
        entering = -1
        if stalled < 50:
            best_red = ZERO
            for j in range(ncols):
                if allowed[j] and red[j] > best_red and j not in basis_set:
                    best_red, entering = red[j], j
        else:
            for j in range(ncols):
                if allowed[j] and red[j] > 0 and j not in basis_set:
                    entering = j
                    break
        if entering < 0:
            return "optimal"
        best = None
        leave = -1
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            return "unbounded"
        stalled = stalled + 1 if best == 0 else 0
        _pivot(T, basis, leave, entering)


def solve(A: Sequence[Sequence], b: Sequence, c: Sequence | None = None) -> LPResult:
    m = len(A)
    n = len(A[0]) if m else len(c or [])
    sign = [ONE] * m
    T: list[list[mpq]] = []
    for i in range(m):
        s = -ONE if _q(b[i]) < 0 else ONE
        sign[i] = s
        row = [_q(v) * s for v in A[i]] + [ONE if k == i else ZERO for k in range(m)] + [_q(b[i]) * s]
        T.append(row)
    basis = [n + i for i in range(m)]
    ncols = n + m
    phase1 = [ZERO] * n + [-ONE] * m
    _optimize(T, basis, phase1, [True] * ncols)

    def duals(cost):
        cb = [cost[bv] for bv in basis]
        y = [sum(cb[k] * T[k][n + i] for k in range(m)) for i in range(m)]
        return [_f(y[i] * sign[i]) for i in range(m)]

    infeas = -sum(T[i][-1] for i in range(m) if basis[i] >= n)
    if infeas < 0:
        return LPResult("infeasible", None, None, duals(phase1))
    # drive zero-level artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if T[i][j] != 0 and j not in basis:
                    _pivot(T, basis, i, j)
                    break
    cost = [_q(v) for v in (c if c is not None else [0] * n)] + [ZERO] * m
    status = _optimize(T, basis, cost, [True] * n + [False] * m)
    x = [ZERO] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = T[i][-1]
    if status == "unbounded":
        return LPResult("unbounded", [_f(v) for v in x], None, None)
    value = sum((cost[j] * x[j] for j in range(n)), ZERO)
    return LPResult("optimal", [_f(v) for v in x], _f(value), duals(cost))


def rank(A: Sequence[Sequence]) -> int:
    """Exact rank by Gaussian elimination on sparse rows."""
    pivots: dict[int, dict] = {}
    for raw in A:
        row = {j: _q(v) for j, v in enumerate(raw) if v}
        while row:
            lead = min(row)
            if lead not in pivots:
                inv = ONE / row[lead]
                pivots[lead] = {j: v * inv for j, v in row.items()}
                break
            f = row[lead]
            for j, v in pivots[lead].items():
                w = row.get(j, ZERO) - f * v
                if w:
                    row[j] = w
                else:
                    row.pop(j, None)
    return len(pivots)
