"""Dense two-phase simplex and the Charnes-Cooper transform.

Sized for desk-scale problems (a few dozen variables). Bland's smallest-index
rule is used in both phases, so the method cannot cycle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from ..errors import DegenerateDenominator, DimensionMismatch, MaxPivots

Array = npt.NDArray[np.float64]

PIVOT_TOL = 1e-9


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"


class LPResult(NamedTuple):
    value: float
    point: Array
    status: LPStatus


def _rows(matrix, rhs, nv: int, name: str) -> tuple[Array, Array]:
    if matrix is None:
        return np.zeros((0, nv)), np.zeros(0)
    m = np.atleast_2d(np.array(matrix, dtype=np.float64))
    r = np.array(rhs, dtype=np.float64).reshape(-1)
    if m.shape[1] != nv or m.shape[0] != r.size:
        raise DimensionMismatch(f"{name}: matrix {m.shape} and rhs {r.shape} do not fit {nv} variables")
    return m, r


@dataclass(eq=False)
class LinearProgram:
    """``minimize objective . v`` subject to

    ``eq_matrix v = eq_rhs``, ``ineq_matrix v <= ineq_rhs`` and ``v_j >= 0``
    wherever ``nonneg_mask[j]`` is set (all variables by default).
    """

    objective: Array
    eq_matrix: Array | None = None
    eq_rhs: Array | None = None
    ineq_matrix: Array | None = None
    ineq_rhs: Array | None = None
    nonneg_mask: npt.NDArray[np.bool_] | None = field(default=None)

    def __post_init__(self) -> None:
        self.objective = np.array(self.objective, dtype=np.float64).reshape(-1)
        nv = self.objective.size
        self.eq_matrix, self.eq_rhs = _rows(self.eq_matrix, self.eq_rhs, nv, "equalities")
        self.ineq_matrix, self.ineq_rhs = _rows(self.ineq_matrix, self.ineq_rhs, nv, "inequalities")
        if self.nonneg_mask is None:
            self.nonneg_mask = np.ones(nv, dtype=bool)
        else:
            self.nonneg_mask = np.array(self.nonneg_mask, dtype=bool).reshape(-1)
            if self.nonneg_mask.size != nv:
                raise DimensionMismatch("nonneg_mask must have one entry per variable")
        if self.eq_rhs.size + self.ineq_rhs.size == 0 and not self.nonneg_mask.any():
            raise ValueError("linear program has no constraints and no bounds")

    @property
    def num_vars(self) -> int:
        return self.objective.size


class _Tableau:
    """Dense tableau; row ``m`` holds reduced costs, the last column the rhs."""

    def __init__(self, T: Array, basis: list[int], tol: float, budget: int) -> None:
        self.T = T
        self.basis = basis
        self.tol = tol
        self.budget = budget
        self.pivots = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, row: int, col: int) -> None:
        self.pivots += 1
        if self.pivots > self.budget:
            raise MaxPivots(f"simplex exceeded {self.budget} pivots")
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col

    def run(self, ncols: int) -> bool:
        """Bland-rule iterations over the first ``ncols`` columns; False if unbounded."""
        T = self.T
        while True:
            reduced = T[self.m, :ncols]
            candidates = np.flatnonzero(reduced < -self.tol)
            if candidates.size == 0:
                return True
            col = int(candidates[0])
            column = T[: self.m, col]
            rows = np.flatnonzero(column > self.tol)
            if rows.size == 0:
                return False
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)


def simplex_solve(lp: LinearProgram, pivot_tol: float = PIVOT_TOL, max_pivots: int | None = None) -> LPResult:
    """Solve ``lp`` with the two-phase dense simplex method.

    Free variables are split into positive and negative parts, inequality
    rows get slacks, and phase one minimizes the sum of artificials. An
    optimal result is a vertex of the standard-form polyhedron.
    """
    nv = lp.num_vars
    budget = max_pivots if max_pivots is not None else 100_000 * max(1, nv)

    # standard-form columns: one per nonneg variable, two per free variable
    col_of = []
    blocks = []
    for j in range(nv):
        col_of.append(len(blocks))
        blocks.append((j, 1.0))
        if not lp.nonneg_mask[j]:
            blocks.append((j, -1.0))
    nstruct = len(blocks)
    expand = np.zeros((nv, nstruct))
    for k, (j, sign) in enumerate(blocks):
        expand[j, k] = sign

    me, mi = lp.eq_rhs.size, lp.ineq_rhs.size
    m = me + mi
    ncols = nstruct + mi
    A = np.zeros((m, ncols))
    A[:me, :nstruct] = lp.eq_matrix @ expand
    A[me:, :nstruct] = lp.ineq_matrix @ expand
    A[me:, nstruct:] = np.eye(mi)
    rhs = np.concatenate([lp.eq_rhs, lp.ineq_rhs])
    flip = rhs < 0
    A[flip] *= -1.0
    rhs[flip] *= -1.0
    cost = np.zeros(ncols)
    cost[:nstruct] = lp.objective @ expand

    # phase one
    T = np.zeros((m + 1, ncols + m + 1))
    T[:m, :ncols] = A
    T[:m, ncols : ncols + m] = np.eye(m)
    T[:m, -1] = rhs
    T[m, :ncols] = -A.sum(axis=0)
    T[m, -1] = -rhs.sum()
    tab = _Tableau(T, list(range(ncols, ncols + m)), pivot_tol, budget)
    tab.run(ncols + m)
    scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if -tab.T[m, -1] > pivot_tol * scale:
        return LPResult(float("nan"), np.full(nv, np.nan), LPStatus.INFEASIBLE)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for row in range(m):
        if tab.basis[row] >= ncols:
            nz = np.flatnonzero(np.abs(tab.T[row, :ncols]) > pivot_tol)
            if nz.size == 0:
                continue
            tab.pivot(row, int(nz[0]))
        keep.append(row)
    T2 = np.zeros((len(keep) + 1, ncols + 1))
    T2[:-1, :ncols] = tab.T[keep, :ncols]
    T2[:-1, -1] = tab.T[keep, -1]
    basis = [tab.basis[r] for r in keep]
    T2[-1, :ncols] = cost
    for row, col in enumerate(basis):
        T2[-1] -= cost[col] * T2[row]

    # phase two
    tab2 = _Tableau(T2, basis, pivot_tol, budget - tab.pivots)
    if not tab2.run(ncols):
        return LPResult(-float("inf"), np.full(nv, np.nan), LPStatus.UNBOUNDED)
    z = np.zeros(ncols)
    for row, col in enumerate(tab2.basis):
        z[col] = tab2.T[row, -1]
    v = expand @ z[:nstruct]
    return LPResult(float(lp.objective @ v), v, LPStatus.OPTIMAL)


@dataclass(eq=False)
class FractionalProgram:
    """``minimize (num . y + num0) / (den . y + den0)`` over ``{y : G y <= h}``.

    The denominator must be positive on the polytope.
    """

    num: Array
    num0: float
    den: Array
    den0: float
    G: Array
    h: Array

    def __post_init__(self) -> None:
        self.num = np.array(self.num, dtype=np.float64).reshape(-1)
        self.den = np.array(self.den, dtype=np.float64).reshape(-1)
        self.G = np.atleast_2d(np.array(self.G, dtype=np.float64))
        self.h = np.array(self.h, dtype=np.float64).reshape(-1)
        self.num0 = float(self.num0)
        self.den0 = float(self.den0)
        n = self.num.size
        if self.den.size != n or self.G.shape != (self.h.size, n):
            raise DimensionMismatch("fractional program data do not agree on dimension")

    def value(self, y: Array) -> float:
        return float((self.num @ y + self.num0) / (self.den @ y + self.den0))


class FractionalResult(NamedTuple):
    value: float
    point: Array
    status: LPStatus


def charnes_cooper(fp: FractionalProgram) -> LinearProgram:
    """Linear program in ``(v, t)`` equivalent to ``fp``.

    ``minimize num . v + num0 t`` s.t. ``G v - h t <= 0``,
    ``den . v + den0 t = 1``, ``t >= 0``, with ``v`` free. An optimal
    ``(v, t)`` with ``t > 0`` maps back through ``y = v / t``.
    """
    if not np.any(fp.den) and fp.den0 == 0.0:
        raise DegenerateDenominator("denominator is identically zero")
    n = fp.num.size
    return LinearProgram(
        objective=np.append(fp.num, fp.num0),
        eq_matrix=np.append(fp.den, fp.den0)[None, :],
        eq_rhs=[1.0],
        ineq_matrix=np.hstack([fp.G, -fp.h[:, None]]),
        ineq_rhs=np.zeros(fp.h.size),
        nonneg_mask=np.r_[np.zeros(n, dtype=bool), True],
    )


def solve_fractional(fp: FractionalProgram, pivot_tol: float = PIVOT_TOL) -> FractionalResult:
    """Minimize ``fp`` through :func:`charnes_cooper` and :func:`simplex_solve`."""
    res = simplex_solve(charnes_cooper(fp), pivot_tol=pivot_tol)
    if res.status is not LPStatus.OPTIMAL:
        return FractionalResult(res.value, res.point[:-1], res.status)
    v, t = res.point[:-1], res.point[-1]
    if t <= pivot_tol:
        raise DegenerateDenominator(f"Charnes-Cooper scale t = {t:.3e}; polytope unbounded or denominator degenerate")
    y = v / t
    if fp.den @ y + fp.den0 <= 0.0:
        raise DegenerateDenominator("denominator is not positive at the optimal vertex")
    return FractionalResult(fp.value(y), y, LPStatus.OPTIMAL)
