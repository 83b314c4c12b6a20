"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are printed
together in the terminal summary (see conftest.py). Running this file as a
script prints them directly.
"""

import math
import time

import numpy as np
import pytest

from eqp import Ball, Box, Halfspace, Intersection, SolverConfig, StepSchedule, solve
from eqp.bench import ExampleSpec, generate_instance, run_benchmark
from eqp.geometry import averaged_projection, feasibility_residual, project, project_intersection_dykstra
from eqp.verify import (
    FractionalProgram,
    LinearProgram,
    LPStatus,
    fejer_audit,
    grid_solution_check,
    sample_feasible,
    simplex_solve,
    solve_fractional,
    star_definition_audit,
)

SEED = 2024
RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str, elapsed: float, budget: float | None = None) -> None:
    if budget is not None and elapsed >= budget:
        ok = False
        detail += f"; runtime {elapsed:.1f}s over the {budget:g}s budget"
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f}s)"
    assert ok, RESULTS[n]


# 1 ---------------------------------------------------------------------------

def _random_set(rng, kind, n):
    if kind == "box":
        lo = rng.uniform(-2, 1, n)
        return Box(lo, lo + rng.uniform(0.1, 3, n))
    if kind == "ball":
        return Ball(rng.uniform(-2, 2, n), float(rng.uniform(0.1, 3)))
    # normals of norm in [0.5, 2] keep projections within a few units of the origin
    direction = rng.normal(size=n)
    return Halfspace(direction / np.linalg.norm(direction) * rng.uniform(0.5, 2.0), float(rng.normal()))


def test_c1_projector_properties():
    rng = np.random.default_rng([SEED, 1])
    start = time.perf_counter()
    worst = {}
    for kind in ("box", "ball", "halfspace"):
        worst[kind] = 0.0
        for _ in range(10_000):
            n = int(rng.integers(1, 6))
            c = _random_set(rng, kind, n)
            x, y = rng.uniform(-6, 6, (2, n))
            px, py = project(x, c), project(y, c)
            idem = float(np.max(np.abs(project(px, c) - px)))
            nonexp = float(np.linalg.norm(px - py) - np.linalg.norm(x - y))
            # py lies in the set, so it is a valid test point for the obtuse angle
            obtuse = float((x - px) @ (py - px))
            worst[kind] = max(worst[kind], idem, nonexp, obtuse)
    elapsed = time.perf_counter() - start
    detail = "worst property excess " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-10)"
    record(1, max(worst.values()) <= 1e-10, detail, elapsed, budget=5.0)


# 2 ---------------------------------------------------------------------------

def test_c2_fixed_points():
    s = Intersection((Box.cube(1, 3, 3), Ball(np.zeros(3), 3.0), Halfspace(np.ones(3), 4.0)))
    start = time.perf_counter()
    feasible = sample_feasible(s, 1000, seed=SEED)
    fixed = feasible[np.linalg.norm(averaged_projection(feasible, s) - feasible, axis=1) <= 1e-10]
    worst_resid = float(np.max(feasibility_residual(fixed, s)))
    rng = np.random.default_rng([SEED, 2])
    outside = rng.uniform(-5, 8, (20_000, 3))
    outside = outside[feasibility_residual(outside, s) > 1e-6][:1000]
    moves = np.linalg.norm(averaged_projection(outside, s) - outside, axis=1)
    elapsed = time.perf_counter() - start
    ok = len(fixed) == 1000 and worst_resid <= 1e-8 and len(outside) == 1000 and moves.min() > 0
    detail = f"{len(fixed)} fixed points, max residual {worst_resid:.1e}; min move off C {moves.min():.2e}"
    record(2, ok, detail, elapsed, budget=2.0)


# 3 ---------------------------------------------------------------------------

def test_c3_fejer_audit():
    start = time.perf_counter()
    worst = -math.inf
    for i in range(20):
        p, s = generate_instance(ExampleSpec(1, 5, SEED), i)
        out = solve(p, s, np.full(5, 2.0), SolverConfig(record_history=True))
        worst = max(worst, fejer_audit(out.history, s, z_samples=100, seed=SEED + i))
    elapsed = time.perf_counter() - start
    record(3, worst <= 1e-9, f"max violation {worst:.3e} over 20 trajectories (tol 1e-9)", elapsed, budget=60.0)


# 4 ---------------------------------------------------------------------------

def test_c4_star_audit():
    start = time.perf_counter()
    worst, kept = -math.inf, 0
    for i in range(20):
        p, s = generate_instance(ExampleSpec(1, 5, SEED), i)
        res = star_definition_audit(p, np.full(5, 2.0), samples=1000, seed=SEED + i)
        worst, kept = max(worst, res.worst_inner), kept + res.kept
    elapsed = time.perf_counter() - start
    ok = kept > 0 and worst < 1e-10
    record(4, ok, f"worst <g, y - x> {worst:.3e} over {kept} level-set samples (tol 1e-10)", elapsed, budget=30.0)


# 5 ---------------------------------------------------------------------------

def test_c5_table1():
    start = time.perf_counter()
    r = run_benchmark(ExampleSpec(1, 5, SEED), 100, SolverConfig(StepSchedule(alpha0=100.0, lam=0.5)))
    elapsed = time.perf_counter() - start
    checks = {
        "err1": 1e-5 <= r.mean_err1 <= 5e-4,
        "err2": 0.05 <= r.mean_err2 <= 0.5,
        "solved": r.solved_fraction >= 0.9,
        "failures": r.failure_count == 0,
    }
    detail = (
        f"mean_err1 {r.mean_err1:.3e} mean_err2 {r.mean_err2:.3f} solved {r.solved_fraction:.2f} "
        f"failures {r.failure_count}; out of band: {[k for k, v in checks.items() if not v] or 'none'}"
    )
    record(5, all(checks.values()), detail, elapsed, budget=300.0)


# 6 ---------------------------------------------------------------------------

def test_c6_table2():
    start = time.perf_counter()
    parts, ok = [], True
    for n in (5, 10):
        r = run_benchmark(ExampleSpec(2, n, SEED), 100)
        good = r.mean_err1 <= 5e-4 and 0.1 <= r.mean_err2 <= 0.6 and r.failure_count == 0
        ok &= good
        parts.append(f"n={n} err1 {r.mean_err1:.3e} err2 {r.mean_err2:.3f} {'ok' if good else 'out of band'}")
    elapsed = time.perf_counter() - start
    record(6, ok, "; ".join(parts), elapsed, budget=600.0)


# 7 ---------------------------------------------------------------------------

def test_c7_table3_err3():
    start = time.perf_counter()
    r = run_benchmark(ExampleSpec(3, 5, SEED), 100)
    elapsed = time.perf_counter() - start
    lowest = min(run.err3 for run in r.runs)
    ok = r.failure_count == 0 and 0.0 <= r.mean_err3 <= 0.2 and lowest >= -1e-9
    record(7, ok, f"mean_err3 {r.mean_err3:.3e}, smallest {lowest:.2e}, failures {r.failure_count}", elapsed, budget=600.0)


# 8 ---------------------------------------------------------------------------

def _vertex_enumeration(c, G, h):
    import itertools

    n = G.shape[1]
    best = math.inf
    for rows in itertools.combinations(range(len(h)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ v <= h + 1e-9 * (1 + np.abs(h))):
            best = min(best, float(c @ v))
    return best


def test_c8_lp_oracles():
    rng = np.random.default_rng([SEED, 8])
    start = time.perf_counter()
    lp_err, infeasible_ok = 0.0, True
    for _ in range(200):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 9))
        G = rng.normal(size=(m, n))
        G[0] = rng.uniform(0.2, 1.0, n)  # bounds the nonnegative orthant
        h = rng.uniform(-0.5, 2.0, m)
        h[0] = rng.uniform(0.5, 2.0)
        c = rng.normal(size=n)
        res = simplex_solve(LinearProgram(c, ineq_matrix=G, ineq_rhs=h))
        oracle = _vertex_enumeration(c, np.vstack([G, -np.eye(n)]), np.concatenate([h, np.zeros(n)]))
        if oracle == math.inf:
            infeasible_ok &= res.status is LPStatus.INFEASIBLE
        else:
            infeasible_ok &= res.status is LPStatus.OPTIMAL
            lp_err = max(lp_err, abs(res.value - oracle))

    h_grid = 0.005
    fp_err = 0.0
    for i in range(50):
        dim = 1 + i % 2
        upper = rng.integers(1, 3, dim).astype(float)
        G, h = np.vstack([np.eye(dim), -np.eye(dim)]), np.concatenate([upper, np.zeros(dim)])
        if dim == 2:
            cut = h_grid * rng.integers(200, int(upper.sum() / h_grid))
            G, h = np.vstack([G, [1.0, 1.0]]), np.append(h, cut)
        fp = FractionalProgram(rng.normal(size=dim), rng.normal(), rng.random(dim), rng.uniform(0.5, 1.5), G, h)
        axes = [np.round(np.arange(0, u + h_grid / 2, h_grid), 10) for u in upper]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)
        mesh = mesh[np.all(mesh @ G.T <= h + 1e-9, axis=1)]
        grid_min = float(np.min((mesh @ fp.num + fp.num0) / (mesh @ fp.den + fp.den0)))
        fp_err = max(fp_err, abs(solve_fractional(fp).value - grid_min))
    elapsed = time.perf_counter() - start
    ok = infeasible_ok and lp_err <= 1e-8 and fp_err <= 1e-4
    detail = f"LP gap to vertex enumeration {lp_err:.1e} (tol 1e-8); fractional gap to grid {fp_err:.1e} (tol 1e-4)"
    record(8, ok, detail, elapsed)


# 9 ---------------------------------------------------------------------------

def _feasible_grid(s, lo, hi, res=1e-3):
    axes = [np.round(np.arange(a, b + res / 2, res), 9) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))
    return mesh[feasibility_residual(mesh, s) <= 1e-9]


def test_c9_dykstra_oracle():
    rng = np.random.default_rng([SEED, 9])
    start = time.perf_counter()
    groups = [(Intersection((Box.cube(0, 2, 2), Halfspace([1.0, 1.0], 3.0))), [0, 0], [2, 2], [np.zeros(2)])]
    for dim, side in ((2, 2.0), (3, 0.2)):
        for _ in range(5):
            lo = np.round(rng.uniform(0, 1, dim), 3)
            hi = lo + side
            normal = rng.uniform(0.2, 1.0, dim)
            offset = float(normal @ (lo + rng.uniform(0.3, 0.7) * side))
            s = Intersection((Box(lo, hi), Halfspace(normal, offset)))
            groups.append((s, lo, hi, lo + rng.uniform(-0.5, 1.5, (5, dim)) * side))
    point_gap = dist_gap = 0.0
    closer = True
    count = 0
    for s, lo, hi, xs in groups:
        mesh = _feasible_grid(s, lo, hi)
        for x in xs:
            p = project_intersection_dykstra(x, s)
            g = mesh[np.argmin(np.sum((mesh - x) ** 2, axis=1))]
            point_gap = max(point_gap, float(np.linalg.norm(p - g)))
            dist_gap = max(dist_gap, float(np.linalg.norm(g - x) - np.linalg.norm(p - x)))
            closer &= bool(np.linalg.norm(p - x) <= np.linalg.norm(g - x) + 1e-12)
            count += 1
    first = project_intersection_dykstra(np.zeros(2), groups[0][0])
    elapsed = time.perf_counter() - start
    ok = point_gap <= 1e-4 and np.allclose(first, [1.5, 1.5], atol=1e-4)
    detail = (
        f"{count} points; max |p_dykstra - p_grid| {point_gap:.1e} (tol 1e-4); "
        f"dykstra never farther than grid: {closer}, max distance gap {dist_gap:.1e}; "
        f"(0,0) -> ({first[0]:.6f}, {first[1]:.6f})"
    )
    record(9, ok, detail, elapsed)


# 10 --------------------------------------------------------------------------

def test_c10_linear_reduction():
    from eqp import FractionalBifunction

    start = time.perf_counter()
    p = FractionalBifunction(np.eye(2), np.eye(2), [-2.0, -2.0], [0.0, 0.0], [0.0, 0.0], 1.0)
    s = Intersection((Box.cube(1, 3, 2), Ball(np.zeros(2), 3.0)))
    out = solve(p, s, np.array([1.0, 1.0]), SolverConfig(StepSchedule(alpha0=1.0)))
    min_f = grid_solution_check(p, s, out.x_final, 0.01)
    elapsed = time.perf_counter() - start
    detail = f"x_final ({out.x_final[0]:.4f}, {out.x_final[1]:.4f}) after {out.iterations} its; min_f {min_f:.3e}"
    record(10, min_f >= -0.05, detail, elapsed, budget=30.0)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
