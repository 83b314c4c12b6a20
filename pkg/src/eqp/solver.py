"""Parallel star-subgradient projection method for equilibrium problems.

One iteration, with ``g`` a star-subgradient of ``f(x_k, .)`` at ``x_k``::

    g_hat   = g / ||g||                 (0 when g vanishes)
    x_{k+1} = (1 - lam_k) x_k + lam_k * sum_i w_i P_{C_i}(x_k - alpha_k g_hat)

The component projections are independent of each other, which is the point
of the method: no projection onto the intersection is ever needed.
"""

from __future__ import annotations

import csv
import enum
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
import numpy.typing as npt

from . import kernels
from .errors import DenominatorNonPositive, DimensionMismatch, NonFiniteIterate
from .geometry import (
    MEMBERSHIP_TOL,
    Intersection,
    averaged_projection,
    bounding_box,
    feasibility_residual,
)
from .problem import EquilibriumBifunction, FractionalBifunction

Array = npt.NDArray[np.float64]


class Status(enum.Enum):
    SOLVED_STATIONARY = "solved_stationary"
    SOLVED_FIXED_POINT = "solved_fixed_point"
    TOLERANCE_STOP = "tolerance_stop"
    MAX_ITERATIONS = "max_iterations"

    @property
    def solved(self) -> bool:
        """True for every stop that fired before the iteration cap."""
        return self is not Status.MAX_ITERATIONS


_KERNEL_STATUS = {
    kernels.STATIONARY: Status.SOLVED_STATIONARY,
    kernels.FIXED_POINT: Status.SOLVED_FIXED_POINT,
    kernels.TOLERANCE: Status.TOLERANCE_STOP,
    kernels.MAX_ITER: Status.MAX_ITERATIONS,
}


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``alpha_k = alpha0 / (k + 1)`` and relaxation ``lam``.

    ``alpha_k`` is positive, strictly decreasing, not summable and square
    summable. ``lam`` is either a constant or a callable ``k -> lam_k``; every
    value it produces must lie in ``[lam_min, lam_max]``, a subinterval of
    ``(0, 1)``.
    """

    alpha0: float = 100.0
    lam: Union[float, Callable[[int], float]] = 0.5
    lam_min: float = 1e-6
    lam_max: float = 1.0 - 1e-6

    def __post_init__(self) -> None:
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if not 0.0 < self.lam_min <= self.lam_max < 1.0:
            raise ValueError("need 0 < lam_min <= lam_max < 1")
        if not callable(self.lam) and not 0.0 < self.lam < 1.0:
            raise ValueError(f"lam must lie strictly inside (0, 1), got {self.lam}")

    @property
    def constant_lam(self) -> bool:
        return not callable(self.lam)

    def alpha(self, k: int) -> float:
        return alpha_at(self, k)

    def relaxation(self, k: int) -> float:
        if not callable(self.lam):
            return float(self.lam)
        lam = float(self.lam(k))
        if not self.lam_min <= lam <= self.lam_max:
            raise ValueError(
                f"lam_{k} = {lam} left [{self.lam_min}, {self.lam_max}]"
            )
        return lam


def alpha_at(schedule: StepSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    return schedule.alpha0 / (k + 1)


@dataclass(frozen=True)
class SolverConfig:
    schedule: StepSchedule = field(default_factory=StepSchedule)
    max_iter: int = 1000
    tol_err1: float = 1e-4
    tol_err2: float = 1e-1
    grad_zero_tol: float = 1e-12
    membership_tol: float = MEMBERSHIP_TOL
    record_history: bool = False

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        for name in ("tol_err1", "tol_err2", "grad_zero_tol", "membership_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """What happened at iteration ``k``.

    ``g`` is the normalized star-subgradient (or exactly zero), ``gnorm`` the
    norm before normalization, ``err1 = ||x_next - x||`` and ``err2`` the
    feasibility residual of ``x``.
    """

    k: int
    x: Array
    g: Array
    alpha: float
    lam: float
    err1: float
    err2: float
    x_next: Array
    gnorm: float


@dataclass(eq=False)
class SolveOutcome:
    """Result of :func:`solve`.

    ``x_final`` is ``x^iterations``: the point the stop fired at for the
    ``SOLVED_*`` statuses, and the last computed iterate otherwise. ``err1``
    and ``err2`` come from the last evaluated iteration.
    """

    status: Status
    x_final: Array
    iterations: int
    err1: float
    err2: float
    elapsed_seconds: float
    backend: str
    history: list[IterationRecord] | None = None


def step(
    x: Array,
    k: int,
    p: EquilibriumBifunction,
    s: Intersection,
    cfg: SolverConfig,
) -> tuple[Array, IterationRecord, Status | None]:
    """Run iteration ``k`` from ``x``; returns ``(next_x, record, terminal)``.

    When the star-subgradient vanishes but ``x`` is still infeasible, the
    direction is taken as zero, which turns the update into a pure
    relaxed averaged-projection step towards the feasible set.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(p.star_subgradient(x), dtype=np.float64)
    gnorm = float(np.linalg.norm(g))
    resid = feasibility_residual(x, s)
    alpha = alpha_at(cfg.schedule, k)
    lam = cfg.schedule.relaxation(k)
    if gnorm <= cfg.grad_zero_tol:
        g_hat = np.zeros_like(x)
        if resid <= cfg.membership_tol:
            rec = IterationRecord(k, x, g_hat, alpha, lam, 0.0, resid, x, gnorm)
            return x, rec, Status.SOLVED_STATIONARY
    else:
        g_hat = g / gnorm
    x_next = (1.0 - lam) * x + lam * averaged_projection(x - alpha * g_hat, s)
    if not np.all(np.isfinite(x_next)):
        raise NonFiniteIterate(f"iterate {k + 1} is not finite")
    err1 = float(np.linalg.norm(x_next - x))
    rec = IterationRecord(k, x, g_hat, alpha, lam, err1, resid, x_next, gnorm)
    if err1 <= cfg.grad_zero_tol and resid <= cfg.membership_tol:
        return x_next, rec, Status.SOLVED_FIXED_POINT
    return x_next, rec, None


def default_start(s: Intersection) -> Array:
    """Midpoint of the bounding box of ``s`` (all twos for ``[1, 3]^n`` boxes)."""
    try:
        lo, hi = bounding_box(s)
    except ValueError:
        return np.zeros(s.dim)
    return 0.5 * (lo + hi)


def random_start(s: Intersection, seed: int) -> Array:
    """Uniform draw from the bounding box of ``s``; reproducible from ``seed``."""
    lo, hi = bounding_box(s)
    return np.random.default_rng(seed).uniform(lo, hi)


def _pick_backend(p: EquilibriumBifunction, cfg: SolverConfig, backend: str) -> str:
    fast_ok = isinstance(p, FractionalBifunction) and cfg.schedule.constant_lam
    if backend == "auto":
        return "numba" if kernels.USE_NUMBA and fast_ok else "numpy"
    if backend == "numba":
        if not kernels.NUMBA_INSTALLED:
            raise RuntimeError("numba backend requested but numba is not installed")
        if not fast_ok:
            raise ValueError("numba backend needs a FractionalBifunction and a constant lam")
        return backend
    if backend == "numpy":
        return backend
    raise ValueError(f"unknown backend {backend!r}")


def solve(
    p: EquilibriumBifunction,
    s: Intersection,
    x0: Array | None = None,
    cfg: SolverConfig | None = None,
    backend: str = "auto",
) -> SolveOutcome:
    """Iterate until a solution test fires, the practical tolerances are met,
    or ``cfg.max_iter`` iterations have run.

    Parameters
    ----------
    p, s : problem bifunction and feasible set
    x0 : starting point, defaults to :func:`default_start`
    cfg : solver configuration
    backend : ``"auto"``, ``"numba"`` or ``"numpy"``. ``"auto"`` uses the fused
        kernel for fractional problems with constant relaxation unless
        ``EQP_DISABLE_NUMBA`` is set.

    Returns
    -------
    SolveOutcome
    """
    cfg = SolverConfig() if cfg is None else cfg
    x0 = default_start(s) if x0 is None else np.array(x0, dtype=np.float64)
    if x0.shape != (s.dim,) or x0.shape != (p.dim,):
        raise DimensionMismatch(f"x0 has shape {x0.shape}; problem and set need ({s.dim},)")
    if not np.all(np.isfinite(x0)):
        raise NonFiniteIterate("x0 is not finite")
    chosen = _pick_backend(p, cfg, backend)
    start = time.perf_counter()
    if chosen == "numba":
        out = _solve_numba(p, s, x0, cfg)
    else:
        out = _solve_numpy(p, s, x0, cfg)
    out.elapsed_seconds = time.perf_counter() - start
    return out


def _solve_numpy(p, s, x0, cfg) -> SolveOutcome:
    history: list[IterationRecord] | None = [] if cfg.record_history else None
    x = x0.copy()
    err1 = err2 = float("nan")
    status = Status.MAX_ITERATIONS
    k = 0
    while k < cfg.max_iter:
        x_next, rec, terminal = step(x, k, p, s, cfg)
        err1, err2 = rec.err1, rec.err2
        if history is not None:
            history.append(rec)
        if terminal is not None:
            status = terminal
            break
        x = x_next
        k += 1
        if err1 < cfg.tol_err1 and err2 < cfg.tol_err2:
            status = Status.TOLERANCE_STOP
            break
    return SolveOutcome(status, x, k, err1, err2, 0.0, "numpy", history)


def _solve_numba(p: FractionalBifunction, s, x0, cfg) -> SolveOutcome:
    sched = cfg.schedule
    (code, error, k, x, err1, err2,
     hx, hg, hnext, halpha, herr1, herr2, hgnorm) = kernels.solve_fractional_kernel(
        p.A, p.A1, p.b, p.b1, p.c, p.d,
        *kernels.pack_intersection(s),
        x0, float(sched.alpha0), float(sched.lam), int(cfg.max_iter),
        float(cfg.tol_err1), float(cfg.tol_err2),
        float(cfg.grad_zero_tol), float(cfg.membership_tol),
        float(p.denominator_tol), bool(cfg.record_history),
    )
    if error == kernels.BAD_DENOMINATOR:
        raise DenominatorNonPositive(f"c.x + d came within {p.denominator_tol:g} of zero at iterate {k}")
    if error == kernels.NON_FINITE:
        raise NonFiniteIterate(f"iterate {k + 1} is not finite")
    history = None
    if cfg.record_history:
        lam = float(sched.lam)
        history = [
            IterationRecord(
                i, hx[i], hg[i], float(halpha[i]), lam,
                float(herr1[i]), float(herr2[i]), hnext[i], float(hgnorm[i]),
            )
            for i in range(len(halpha))
        ]
    return SolveOutcome(_KERNEL_STATUS[code], x, int(k), float(err1), float(err2), 0.0, "numba", history)


def write_trajectory(history: list[IterationRecord], path: str | Path) -> None:
    """CSV with columns ``k, err1, err2, alpha, gnorm, x0 .. x{n-1}``."""
    if not history:
        raise ValueError("empty history; solve with record_history=True")
    n = history[0].x.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "err1", "err2", "alpha", "gnorm"] + [f"x{i}" for i in range(n)])
        for rec in history:
            w.writerow(
                [rec.k, repr(rec.err1), repr(rec.err2), repr(rec.alpha), repr(rec.gnorm)]
                + [repr(float(v)) for v in rec.x]
            )
