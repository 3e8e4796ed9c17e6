"""Two-phase primal simplex in exact integer arithmetic.

The tableau is kept fraction-free: it is an integer matrix ``T`` together
with a common denominator ``D`` (the current basis determinant), and the
rational tableau is ``T / D``.  A pivot on ``p = T[r, s]`` updates every
other row as ``(T[i] * p - T[i, s] * T[r]) / D``, which divides exactly.

Pivoting follows Bland's rule (smallest eligible entering column, ties in
the ratio test broken by smallest basic variable), so the solver cannot
cycle and is deterministic.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction

import numpy as np

from .lp import Certificate, ConstraintSet, LinearProgram, Unbounded

log = logging.getLogger(__name__)


def _integer_row(row: dict, rhs: Fraction, n: int) -> tuple[list[int], Fraction, int]:
    """Scale a row to integer coefficients; returns (coefficients, scaled rhs, scale).

    The right-hand side stays rational so that data with large denominators
    does not inflate the coefficient matrix.
    """
    k = math.lcm(*(v.denominator for v in row.values())) if row else 1
    coeffs = [0] * n
    for j, v in row.items():
        coeffs[j] = int(v * k)
    return coeffs, rhs * k, k


def independent_rows(cs: ConstraintSet, n: int) -> list[int]:
    """Indices of a maximal linearly independent subset of the rows of [A | b].

    Fraction-free (Bareiss) elimination; dropped rows are exact linear
    combinations of the kept ones, right-hand side included.
    """
    if not len(cs):
        return []
    rows = []
    for r, b in zip(cs.rows, cs.rhs):
        coeffs, b, _ = _integer_row(r, b, n)
        rows.append([v * b.denominator for v in coeffs] + [b.numerator])
    mat = np.array(rows, dtype=object)
    m, ncols = mat.shape
    order = list(range(m))  # order[k] = original row at position k
    prev = 1
    rank = 0
    for col in range(ncols):
        if rank == m:
            break
        nz = [k for k in range(rank, m) if mat[k, col] != 0]
        if not nz:
            continue
        k = nz[0]
        if k != rank:
            mat[[rank, k]] = mat[[k, rank]]
            order[rank], order[k] = order[k], order[rank]
        p = mat[rank, col]
        below = mat[rank + 1:]
        if below.shape[0]:
            mat[rank + 1:] = (below * p - np.outer(below[:, col], mat[rank])) // prev
        prev = p
        rank += 1
    return sorted(order[:rank])


class _Tableau:
    def __init__(self, rows: list[list[int]], rhs: list[int], initial_basis: list[int]):
        m = len(rows)
        self.m = m
        self.T = np.empty((m + 1, len(rows[0]) + 1), dtype=object)
        for i in range(m):
            self.T[i, :-1] = rows[i]
            self.T[i, -1] = Fraction(rhs[i])
        self.T[m, :-1] = 0
        self.T[m, -1] = Fraction(0)
        self.D = 1
        self.basis = list(initial_basis)
        self.pivots = 0

    @property
    def sign(self) -> int:
        return 1 if self.D > 0 else -1

    def pivot(self, r: int, s: int) -> None:
        T = self.T
        p = T[r, s]
        row = T[r].copy()
        col = T[:, s].copy()
        # integer block divides exactly; the rhs column holds Fractions
        T[:, :-1] = (T[:, :-1] * p - np.outer(col, row[:-1])) // self.D
        T[:, -1] = (T[:, -1] * p - col * row[-1]) / self.D
        T[r] = row
        self.D = p
        self.basis[r] = s
        self.pivots += 1

    def entering(self, allowed: np.ndarray) -> int | None:
        """Bland: first allowed column with negative reduced cost."""
        obj = self.T[self.m, :-1]
        sgn = self.sign
        for j in np.flatnonzero(allowed):
            if obj[j] * sgn < 0:
                return int(j)
        return None

    def leaving(self, s: int) -> int | None:
        T = self.T
        sgn = self.sign
        best = None
        for i in range(self.m):
            a = T[i, s]
            if a == 0 or (a > 0) != (sgn > 0):
                continue
            ratio = T[i, -1] / a
            key = (ratio, self.basis[i])
            if best is None or key < best[0]:
                best = (key, i)
        return None if best is None else best[1]

    def run(self, allowed: np.ndarray) -> None:
        while True:
            s = self.entering(allowed)
            if s is None:
                return
            r = self.leaving(s)
            if r is None:
                raise Unbounded(f"column {s} is unbounded")
            self.pivot(r, s)
            if self.pivots % 100 == 0:
                log.debug("pivot %d, objective %s", self.pivots, self.value(-1))

    def set_objective(self, c: list[int]) -> None:
        """Reduced-cost row for maximizing the integer cost vector ``c``."""
        T = self.T
        cb = np.array([c[j] for j in self.basis], dtype=object)
        T[self.m] = cb.dot(T[: self.m])
        T[self.m, :-1] -= np.array(c, dtype=object) * self.D

    def value(self, j: int) -> Fraction:
        return Fraction(self.T[self.m, j]) / self.D


def solve(lp: LinearProgram) -> Certificate:
    """Maximize ``lp``; returns an optimality or a Farkas infeasibility certificate.

    Raises :class:`Unbounded` if the objective is unbounded above.
    """
    n = lp.n_vars
    keep_eq = independent_rows(lp.equalities, n)
    row_kinds = [("eq", i) for i in keep_eq] + [("ub", i) for i in range(len(lp.inequalities))]
    n_slack = len(lp.inequalities)
    rows, rhs, scale, sigma = [], [], [], []
    for kind, i in row_kinds:
        cs = lp.equalities if kind == "eq" else lp.inequalities
        coeffs, b, k = _integer_row(cs.rows[i], cs.rhs[i], n)
        slack = [0] * n_slack
        if kind == "ub":
            slack[i] = 1
        sg = -1 if b < 0 else 1
        rows.append([sg * v for v in coeffs + slack])
        rhs.append(sg * b)
        scale.append(k)
        sigma.append(sg)

    m = len(rows)
    needs_art = [not (kind == "ub" and sg > 0) for (kind, _), sg in zip(row_kinds, sigma)]
    art_cols = {}
    n_art = sum(needs_art)
    base = n + n_slack
    for i in range(m):
        rows[i] = rows[i] + [0] * n_art
    for i, need in enumerate(needs_art):
        if need:
            col = base + len(art_cols)
            art_cols[i] = col
            rows[i][col] = 1
    unit_col = [art_cols[i] if needs_art[i] else n + row_kinds[i][1] for i in range(m)]
    ncols = base + n_art
    tab = _Tableau(rows, rhs, unit_col)

    # phase 1: maximize -sum(artificials)
    c1 = [0] * base + [-1] * n_art
    tab.set_objective(c1)
    allowed = np.ones(ncols, dtype=bool)
    tab.run(allowed)
    phase1 = tab.value(ncols)
    log.info("phase 1 done after %d pivots, infeasibility %s", tab.pivots, -phase1)

    def original_duals(c_unit):
        y_eq = [Fraction(0)] * len(lp.equalities)
        y_ub = [Fraction(0)] * len(lp.inequalities)
        for i, (kind, idx) in enumerate(row_kinds):
            y = tab.value(unit_col[i]) + c_unit[unit_col[i]]
            y = y * scale[i] * sigma[i]
            (y_eq if kind == "eq" else y_ub)[idx] = y
        return tuple(y_eq), tuple(y_ub)

    if phase1 < 0:
        y_eq, y_ub = original_duals(c1)
        return Certificate("infeasible", y_eq, y_ub, pivots=tab.pivots)

    # drive zero-level artificials out of the basis where possible
    art_set = set(art_cols.values())
    for r in range(m):
        if tab.basis[r] in art_set:
            for j in range(base):
                if tab.T[r, j] != 0:
                    tab.pivot(r, j)
                    break

    # phase 2
    dens = [v.denominator for v in lp.objective.values()]
    lcm = math.lcm(*dens) if dens else 1
    c2 = [0] * ncols
    for j, v in lp.objective.items():
        c2[j] = int(v * lcm)
    tab.set_objective(c2)
    allowed[base:] = False
    tab.run(allowed)
    log.info("phase 2 done after %d pivots total", tab.pivots)

    x = [Fraction(0)] * ncols
    for i, j in enumerate(tab.basis):
        x[j] = Fraction(tab.T[i, -1]) / tab.D
    primal = tuple(x[:n])
    y_eq, y_ub = original_duals([0] * ncols)
    y_eq = tuple(y / lcm for y in y_eq)
    y_ub = tuple(y / lcm for y in y_ub)
    return Certificate("optimal", y_eq, y_ub, primal=primal,
                       objective=tab.value(ncols) / lcm, pivots=tab.pivots)
