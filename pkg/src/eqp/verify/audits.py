"""Independent checks on solver output.

Each audit recomputes what it needs from the problem data and the recorded
trajectory instead of trusting solver internals.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt

from ..errors import DimensionTooLarge, NonPolyhedralSet, SamplingFailure, SubproblemFailure
from ..geometry import (
    MEMBERSHIP_TOL,
    Ball,
    Box,
    Halfspace,
    Intersection,
    averaged_projection,
    bounding_box,
    feasibility_residual,
    project_intersection_dykstra,
)
from ..problem import EquilibriumBifunction, FractionalBifunction
from ..solver import IterationRecord
from .lp import FractionalProgram, LPStatus, solve_fractional

Array = npt.NDArray[np.float64]

MAX_REJECTION_DRAWS = 100_000


def sample_feasible(
    s: Intersection,
    count: int,
    seed: int,
    max_draws: int = MAX_REJECTION_DRAWS,
    tol: float = MEMBERSHIP_TOL,
) -> Array:
    """Up to ``count`` points of ``s`` by rejection from its bounding box.

    Returns fewer points if the draw budget runs out first.

    Raises
    ------
    SamplingFailure
        If no draw at all lands in ``s``.
    """
    lo, hi = bounding_box(s)
    rng = np.random.default_rng(seed)
    found: list[Array] = []
    have = 0
    drawn = 0
    while have < count and drawn < max_draws:
        batch = min(max(4 * count, 1024), max_draws - drawn)
        pts = rng.uniform(lo, hi, size=(batch, s.dim))
        drawn += batch
        ok = pts[feasibility_residual(pts, s) <= tol]
        found.append(ok)
        have += len(ok)
    if have == 0:
        raise SamplingFailure(f"no feasible point in {drawn} rejection draws")
    return np.concatenate(found)[:count]


def fejer_terms(rec: IterationRecord, s: Intersection, z: Array) -> Array:
    """``lhs - rhs`` of the per-iteration distance inequality, one entry per row of ``z``.

    ``||x_{k+1} - z||^2 <= ||x_k - z||^2 + 2 lam alpha <g, z - x_k>
    + lam alpha^2 - lam (1 - lam) ||x_k - P_w(x_k - alpha g)||^2``
    """
    x, g, a, lam = rec.x, rec.g, rec.alpha, rec.lam
    shifted = averaged_projection(x - a * g, s)
    lhs = np.sum((rec.x_next - z) ** 2, axis=-1)
    rhs = (
        np.sum((x - z) ** 2, axis=-1)
        + 2.0 * lam * a * ((z - x) @ g)
        + lam * a * a
        - lam * (1.0 - lam) * float(np.sum((x - shifted) ** 2))
    )
    return lhs - rhs


def fejer_audit(
    history: Sequence[IterationRecord],
    s: Intersection,
    z_samples: int = 100,
    seed: int = 0,
    extra_points: Array | None = None,
) -> float:
    """Largest violation of the distance inequality over a trajectory.

    Feasible reference points ``z`` come from seeded rejection sampling,
    plus any ``extra_points`` the caller supplies. A correct trajectory gives
    at most rounding-level positive values.
    """
    if len(history) < 2:
        raise ValueError("fejer_audit needs a history with at least two records")
    zs = sample_feasible(s, z_samples, seed) if z_samples > 0 else np.empty((0, s.dim))
    if extra_points is not None:
        zs = np.vstack([zs, np.atleast_2d(extra_points)])
    if len(zs) == 0:
        raise SamplingFailure("no reference points to audit against")
    return max(float(fejer_terms(rec, s, zs).max()) for rec in history)


class StarAudit(NamedTuple):
    """``lipschitz_gap`` is the largest ``L_hat <g, y - x> - f(x, y)`` over the
    level set. It is advisory, because ``L_hat`` is only a sampled lower
    estimate of the Lipschitz constant."""

    worst_inner: float
    kept: int
    lipschitz_estimate: float
    lipschitz_gap: float


def star_definition_audit(
    p: EquilibriumBifunction,
    x: Array,
    samples: int = 1000,
    seed: int = 0,
    radius: float = 1.0,
    level_tol: float = 1e-9,
) -> StarAudit:
    """Check the star-subgradient against its definition by sampling.

    Draws ``y`` uniformly from the box ``x +- radius``, keeps the draws with
    ``f(x, y) < -level_tol`` and reports the largest ``<g_hat, y - x>`` over
    them; it must be negative. Draws outside the problem's domain are
    skipped. With no kept draws the result is ``-inf`` and a warning is
    issued.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    ys = x + rng.uniform(-radius, radius, size=(samples, x.size))
    if isinstance(p, FractionalBifunction):
        ys = ys[ys @ p.c + p.d > p.denominator_tol]
    vals = np.asarray(p.evaluate(x, ys), dtype=np.float64).reshape(-1) if len(ys) else np.empty(0)
    dist = np.linalg.norm(ys - x, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotients = np.abs(vals) / dist
    lip = float(np.nanmax(quotients[dist > 0], initial=0.0))
    if len(ys) > 1:
        dy = np.linalg.norm(np.diff(ys, axis=0), axis=-1)
        pair = np.abs(np.diff(vals))[dy > 0] / dy[dy > 0]
        lip = max(lip, float(pair.max(initial=0.0)))

    g = np.asarray(p.star_subgradient(x), dtype=np.float64)
    gnorm = float(np.linalg.norm(g))
    mask = vals < -level_tol
    if gnorm <= 1e-12 or not mask.any():
        warnings.warn("no sampled point in the strict level set; returning -inf", stacklevel=2)
        return StarAudit(-math.inf, 0, lip, -math.inf)
    g_hat = g / gnorm
    inner = (ys[mask] - x) @ g_hat
    return StarAudit(
        float(inner.max()),
        int(mask.sum()),
        lip,
        float(np.max(lip * inner - vals[mask])),
    )


def polytope_rows(s: Intersection) -> tuple[Array, Array]:
    """Inequality system ``G y <= h`` describing a box/halfspace intersection."""
    G: list[Array] = []
    h: list[Array] = []
    n = s.dim
    for c in s.components:
        if isinstance(c, Box):
            G += [np.eye(n), -np.eye(n)]
            h += [c.upper, -c.lower]
        elif isinstance(c, Halfspace):
            G.append(-c.normal[None, :])
            h.append(np.array([-c.offset]))
        elif isinstance(c, Ball):
            raise NonPolyhedralSet("err3 needs a polyhedral feasible set; found a ball")
        else:
            raise TypeError(f"unsupported set type {type(c).__name__}")
    return np.vstack(G), np.concatenate(h)


class Err3Result(NamedTuple):
    value: float
    relative: bool
    x_proj: Array
    y_min: Array
    at_proj: float
    minimum: float


def err3_details(
    p: FractionalBifunction,
    xk: Array,
    s: Intersection,
    dykstra_tol: float = 1e-10,
) -> Err3Result:
    """Relative optimality gap of the frozen fractional subproblem.

    With ``x_hat`` the projection of ``xk`` onto ``C`` and
    ``g(x, y) = <Ax + b, (A1 y + b1)/(c.y + d)>``, returns
    ``(g(x_hat, x_hat) - min_C g(x_hat, .)) / g(x_hat, x_hat)``. When
    ``|g(x_hat, x_hat)| < 1e-12`` the absolute gap is returned instead and
    ``relative`` is False.
    """
    G, h = polytope_rows(s)
    x_hat = project_intersection_dykstra(xk, s, tol=dykstra_tol)
    q = p.A @ x_hat + p.b
    fp = FractionalProgram(p.A1.T @ q, q @ p.b1, p.c, p.d, G, h)
    res = solve_fractional(fp)
    if res.status is not LPStatus.OPTIMAL:
        raise SubproblemFailure(f"frozen subproblem is {res.status.value}")
    at_proj = float(p.frozen_value(x_hat, x_hat))
    gap = at_proj - res.value
    if abs(at_proj) < 1e-12:
        return Err3Result(gap, False, x_hat, res.point, at_proj, res.value)
    return Err3Result(gap / at_proj, True, x_hat, res.point, at_proj, res.value)


def err3_gap(p: FractionalBifunction, xk: Array, s: Intersection) -> float:
    return err3_details(p, xk, s).value


def grid_solution_check(
    p: EquilibriumBifunction,
    s: Intersection,
    x_cand: Array,
    resolution: float,
    membership_tol: float = MEMBERSHIP_TOL,
    chunk: int = 200_000,
) -> float:
    """``min f(x_cand, y)`` over the grid points ``y`` of ``C``.

    The grid spans the bounding box of ``C`` with spacing ``resolution``.
    ``x_cand`` passes when the result is at least minus the caller's
    tolerance. Feasibility of ``x_cand`` itself is not checked here.
    """
    if s.dim > 3:
        raise DimensionTooLarge(f"grid check is limited to dimension 3, got {s.dim}")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    lo, hi = bounding_box(s)
    axes = [np.arange(a, b + 0.5 * resolution, resolution) for a, b in zip(lo, hi)]
    for ax, b in zip(axes, hi):
        ax[-1] = min(ax[-1], b)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, s.dim)
    best = math.inf
    for start in range(0, len(mesh), chunk):
        pts = mesh[start : start + chunk]
        pts = pts[feasibility_residual(pts, s) <= membership_tol]
        if len(pts):
            best = min(best, float(np.min(p.evaluate(x_cand, pts))))
    if best == math.inf:
        raise SamplingFailure("no grid point lies in the feasible set")
    return best


def audit_line(fejer: float = math.nan, star: float = math.nan, err3: float = math.nan) -> str:
    """Machine-readable summary line for CI scraping."""
    return f"AUDIT fejer max_violation={fejer:.6e} star worst_inner={star:.6e} err3={err3:.6e}"
