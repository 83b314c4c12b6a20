"""Compiled inner loop for the fractional benchmark family.

The numpy path in :mod:`eqp.solver` handles any bifunction. For
:class:`~eqp.problem.FractionalBifunction` over box/ball/halfspace
intersections the whole iteration is fused into one numba kernel, which
removes the per-iteration Python overhead that dominates at benchmark sizes.

Set ``EQP_DISABLE_NUMBA=1`` to make the numpy path the default. Both paths
stay importable either way so they can be compared.
"""

from __future__ import annotations

import os

import numpy as np

from .geometry import Ball, Box, Halfspace, Intersection

try:
    from numba import njit

    NUMBA_INSTALLED = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_INSTALLED = False

NUMBA_DISABLED = os.environ.get("EQP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
USE_NUMBA = NUMBA_INSTALLED and not NUMBA_DISABLED

BOX, BALL, HALFSPACE = 0, 1, 2

# status codes shared with solver.Status
RUNNING, STATIONARY, FIXED_POINT, TOLERANCE, MAX_ITER = 0, 1, 2, 3, 4
# error codes
OK, BAD_DENOMINATOR, NON_FINITE = 0, 1, 2


def pack_intersection(s: Intersection) -> tuple:
    """Flatten an intersection into dense arrays the kernel can read."""
    m, n = len(s), s.dim
    kinds = np.empty(m, dtype=np.int64)
    lo = np.zeros((m, n))
    hi = np.zeros((m, n))
    center = np.zeros((m, n))
    normal = np.zeros((m, n))
    radius = np.zeros(m)
    offset = np.zeros(m)
    for i, c in enumerate(s.components):
        if isinstance(c, Box):
            kinds[i] = BOX
            lo[i], hi[i] = c.lower, c.upper
        elif isinstance(c, Ball):
            kinds[i] = BALL
            center[i], radius[i] = c.center, c.radius
        elif isinstance(c, Halfspace):
            kinds[i] = HALFSPACE
            normal[i], offset[i] = c.normal, c.offset
        else:
            raise TypeError(f"unsupported set type {type(c).__name__}")
    return kinds, lo, hi, center, radius, normal, offset, np.array(s.weights, dtype=np.float64)


if NUMBA_INSTALLED:

    @njit(cache=True, nogil=True)
    def _project_component(x, i, kinds, lo, hi, center, radius, normal, offset, out):
        n = x.size
        kind = kinds[i]
        if kind == BOX:
            for j in range(n):
                v = x[j]
                if v < lo[i, j]:
                    v = lo[i, j]
                if v > hi[i, j]:
                    v = hi[i, j]
                out[j] = v
        elif kind == BALL:
            ss = 0.0
            for j in range(n):
                t = x[j] - center[i, j]
                ss += t * t
            dist = np.sqrt(ss)
            if dist <= radius[i]:
                for j in range(n):
                    out[j] = x[j]
            else:
                scale = radius[i] / dist
                for j in range(n):
                    out[j] = center[i, j] + scale * (x[j] - center[i, j])
        else:
            s = 0.0
            aa = 0.0
            for j in range(n):
                s += x[j] * normal[i, j]
                aa += normal[i, j] * normal[i, j]
            shortfall = offset[i] - s
            if shortfall > 0.0:
                t = shortfall / aa
                for j in range(n):
                    out[j] = x[j] + t * normal[i, j]
            else:
                for j in range(n):
                    out[j] = x[j]

    @njit(cache=True, nogil=True)
    def averaged_projection_kernel(x, kinds, lo, hi, center, radius, normal, offset, weights, out):
        n = x.size
        buf = np.empty(n)
        fixed = True
        for j in range(n):
            out[j] = 0.0
        for i in range(kinds.size):
            _project_component(x, i, kinds, lo, hi, center, radius, normal, offset, buf)
            for j in range(n):
                if buf[j] != x[j]:
                    fixed = False
                out[j] += weights[i] * buf[j]
        if fixed:
            for j in range(n):
                out[j] = x[j]

    @njit(cache=True, nogil=True)
    def feasibility_residual_kernel(x, kinds, lo, hi, center, radius, normal, offset):
        n = x.size
        buf = np.empty(n)
        total = 0.0
        for i in range(kinds.size):
            _project_component(x, i, kinds, lo, hi, center, radius, normal, offset, buf)
            ss = 0.0
            for j in range(n):
                t = x[j] - buf[j]
                ss += t * t
            total += np.sqrt(ss)
        return total

    @njit(cache=True, nogil=True)
    def solve_fractional_kernel(
        A, A1, b, b1, c, d,
        kinds, lo, hi, center, radius, normal, offset, weights,
        x0, alpha0, lam, max_iter, tol_err1, tol_err2,
        grad_zero_tol, membership_tol, den_tol, record,
    ):
        n = x0.size
        x = x0.copy()
        q = np.empty(n)
        r = np.empty(n)
        g = np.empty(n)
        y = np.empty(n)
        p = np.empty(n)
        xn = np.empty(n)
        cap = max_iter if record else 0
        hist_x = np.empty((cap, n))
        hist_g = np.empty((cap, n))
        hist_next = np.empty((cap, n))
        hist_alpha = np.empty(cap)
        hist_err1 = np.empty(cap)
        hist_err2 = np.empty(cap)
        hist_gnorm = np.empty(cap)
        status = RUNNING
        error = OK
        count = 0
        k = 0
        last_err1 = np.nan
        last_err2 = np.nan
        while k < max_iter:
            den = d
            for i in range(n):
                den += c[i] * x[i]
            if abs(den) <= den_tol:
                error = BAD_DENOMINATOR
                break
            for i in range(n):
                qi = b[i]
                ri = b1[i]
                for j in range(n):
                    qi += A[i, j] * x[j]
                    ri += A1[i, j] * x[j]
                q[i] = qi
                r[i] = ri
            kappa = 0.0
            for i in range(n):
                kappa += q[i] * r[i]
            kappa /= den
            gg = 0.0
            for j in range(n):
                gj = 0.0
                for i in range(n):
                    gj += A1[i, j] * q[i]
                gj -= kappa * c[j]
                g[j] = gj
                gg += gj * gj
            gnorm = np.sqrt(gg)
            resid = feasibility_residual_kernel(x, kinds, lo, hi, center, radius, normal, offset)
            last_err2 = resid
            alpha = alpha0 / (k + 1)
            if gnorm <= grad_zero_tol:
                for j in range(n):
                    g[j] = 0.0
                if resid <= membership_tol:
                    last_err1 = 0.0
                    if record:
                        hist_x[count] = x
                        hist_g[count] = g
                        hist_next[count] = x
                        hist_alpha[count] = alpha
                        hist_err1[count] = 0.0
                        hist_err2[count] = resid
                        hist_gnorm[count] = gnorm
                        count += 1
                    status = STATIONARY
                    break
            else:
                for j in range(n):
                    g[j] = g[j] / gnorm
            for j in range(n):
                y[j] = x[j] - alpha * g[j]
            averaged_projection_kernel(y, kinds, lo, hi, center, radius, normal, offset, weights, p)
            moved = 0.0
            finite = True
            for j in range(n):
                xn[j] = (1.0 - lam) * x[j] + lam * p[j]
                if not np.isfinite(xn[j]):
                    finite = False
                t = xn[j] - x[j]
                moved += t * t
            if not finite:
                error = NON_FINITE
                break
            err1 = np.sqrt(moved)
            last_err1 = err1
            if record:
                hist_x[count] = x
                hist_g[count] = g
                hist_next[count] = xn
                hist_alpha[count] = alpha
                hist_err1[count] = err1
                hist_err2[count] = resid
                hist_gnorm[count] = gnorm
                count += 1
            if err1 <= grad_zero_tol and resid <= membership_tol:
                status = FIXED_POINT
                break
            for j in range(n):
                x[j] = xn[j]
            k += 1
            if err1 < tol_err1 and resid < tol_err2:
                status = TOLERANCE
                break
        if status == RUNNING and error == OK:
            status = MAX_ITER
        return (
            status, error, k, x, last_err1, last_err2,
            hist_x[:count], hist_g[:count], hist_next[:count],
            hist_alpha[:count], hist_err1[:count], hist_err2[:count], hist_gnorm[:count],
        )
