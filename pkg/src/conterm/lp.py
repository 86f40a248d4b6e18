"""Exact rational linear-program feasibility (Phase-I simplex, Bland's rule).

Small and deterministic; used to solve Farkas-style constraint systems during
ranking-function synthesis.  All arithmetic is over fractions.Fraction, so a
"feasible" answer comes with an exact rational witness.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

__all__ = ["feasible", "float_feasible"]

Row = Sequence[Fraction | int]


def float_feasible(n: int,
                   eqs: Iterable[tuple[Row, float]],
                   ineqs: Iterable[tuple[Row, float]],
                   max_pivots: int = 500) -> bool | None:
    """Floating-point phase-I simplex over free variables: True/False when
    the verdict is numerically clear, None when inconclusive.  Callers treat
    the answer as a filter only, so small numerical errors are harmless."""
    import numpy as np

    eqs, ineqs = list(eqs), list(ineqs)
    m = len(eqs) + len(ineqs)
    if m == 0:
        return True
    nslack = len(ineqs)
    ncols = 2 * n + nslack  # x+ , x- , slacks
    T = np.zeros((m, ncols + m + 1))
    for r, (a, b) in enumerate(eqs + ineqs):
        T[r, :n] = a
        T[r, n:2 * n] = [-c for c in a]
        T[r, -1] = b
    for j in range(nslack):
        T[len(eqs) + j, 2 * n + j] = 1.0
    neg = T[:, -1] < 0
    T[neg] *= -1.0
    for r in range(m):
        T[r, ncols + r] = 1.0

    obj = T.sum(axis=0)
    obj[ncols:ncols + m] = 0.0
    tol = 1e-9
    for _ in range(max_pivots):
        enter = int(np.argmax(obj[:ncols]))
        if obj[enter] <= tol:
            break
        col = T[:, enter]
        mask = col > tol
        if not mask.any():
            return None  # numerically degenerate
        ratios = np.where(mask, T[:, -1] / np.where(mask, col, 1.0), np.inf)
        leave = int(np.argmin(ratios))
        T[leave] /= T[leave, enter]
        piv = T[leave]
        factors = T[:, enter].copy()
        factors[leave] = 0.0
        T -= np.outer(factors, piv)
        obj = obj - obj[enter] * piv
    else:
        return None
    w = obj[-1]  # remaining artificial mass: 0 iff feasible
    if abs(w) <= 1e-7 * (1.0 + abs(T[:, -1]).max()):
        return True
    if w > 1e-6:
        return False
    return None


def feasible(n: int,
             eqs: Iterable[tuple[Row, Fraction | int]],
             ineqs: Iterable[tuple[Row, Fraction | int]],
             nonneg: set[int] = frozenset()) -> list[Fraction] | None:
    """Find x in Q^n with a.x = b for eqs, a.x <= b for ineqs, x_i >= 0 for
    i in nonneg.  Returns a witness or None if infeasible."""
    eqs = list(eqs)
    ineqs = list(ineqs)

    # column layout: each free variable is split into x+ - x-
    cols: list[tuple[int, int]] = []
    for i in range(n):
        cols.append((i, 1))
        if i not in nonneg:
            cols.append((i, -1))
    nstruct = len(cols)
    nslack = len(ineqs)
    ncols = nstruct + nslack

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for a, b in eqs + ineqs:
        rows.append([Fraction(a[vi]) * s for vi, s in cols] + [Fraction(0)] * nslack)
        rhs.append(Fraction(b))
    for j in range(nslack):
        rows[len(eqs) + j][nstruct + j] = Fraction(1)

    m = len(rows)
    if m == 0:
        return [Fraction(0)] * n
    for r in range(m):
        if rhs[r] < 0:
            rows[r] = [-c for c in rows[r]]
            rhs[r] = -rhs[r]

    # artificial basis; minimize their sum
    for r in range(m):
        rows[r].extend(Fraction(1) if i == r else Fraction(0) for i in range(m))
    basis = [ncols + r for r in range(m)]
    d = [sum(rows[r][j] for r in range(m)) for j in range(ncols + m)]
    w0 = sum(rhs)

    while True:
        enter = next((j for j in range(ncols) if d[j] > 0), None)  # Bland
        if enter is None:
            break
        leave, best = None, None
        for r in range(m):
            c = rows[r][enter]
            if c > 0:
                ratio = rhs[r] / c
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave is None:
            # unbounded descent of a nonnegative objective cannot happen
            raise RuntimeError("phase-I objective unbounded")
        piv = rows[leave][enter]
        rows[leave] = [c / piv for c in rows[leave]]
        rhs[leave] /= piv
        for r in range(m):
            if r != leave and rows[r][enter] != 0:
                f = rows[r][enter]
                rows[r] = [c - f * p for c, p in zip(rows[r], rows[leave])]
                rhs[r] -= f * rhs[leave]
        f = d[enter]
        d = [c - f * p for c, p in zip(d, rows[leave])]
        w0 -= f * rhs[leave]
        basis[leave] = enter

    if w0 != 0:
        return None
    x = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < nstruct:
            vi, s = cols[b]
            x[vi] += s * rhs[r]
    return x
