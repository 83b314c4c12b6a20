"""Random benchmark instances, batch runs and their serialization.

Three recipes, all with data entries drawn uniformly from ``[0, 1]``:

1. ``[1, 3]^n`` ∩ ball(0, 3)
2. ``[1, 3]^n`` ∩ ball(0, 3) ∩ ``{sum_i x_i >= n + 1}``
3. ``[1, 3]^n`` ∩ ``{x_1 + x_2 + x_3 >= 3}``; also reports the err3 gap
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .errors import DegenerateDraw, EqpError, InstanceFormatError
from .geometry import (
    Ball,
    Box,
    Halfspace,
    Intersection,
    intersection_from_dict,
    intersection_to_dict,
)
from .problem import FractionalBifunction
from .solver import SolverConfig, solve
from .verify.audits import err3_gap

log = logging.getLogger(__name__)

REPORT_HEADER = [
    "example", "dim", "count", "mean_time_s", "mean_err1",
    "mean_err2", "mean_err3", "solved_fraction", "seed",
]


@dataclass(frozen=True)
class ExampleSpec:
    example_id: int
    dim: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.example_id not in (1, 2, 3):
            raise ValueError(f"example_id must be 1, 2 or 3, got {self.example_id}")
        if self.dim < (3 if self.example_id == 3 else 1):
            raise ValueError(f"dimension {self.dim} too small for example {self.example_id}")


def _generator(seed: int, index: int) -> np.random.Generator:
    # Philox is counter based: the (seed, index) key fixes the stream on its own
    key = np.array([seed % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def example_sets(example_id: int, n: int) -> Intersection:
    box = Box.cube(1.0, 3.0, n)
    if example_id == 1:
        return Intersection((box, Ball(np.zeros(n), 3.0)))
    if example_id == 2:
        return Intersection((box, Ball(np.zeros(n), 3.0), Halfspace(np.ones(n), n + 1.0)))
    if example_id == 3:
        normal = np.zeros(n)
        normal[:3] = 1.0
        return Intersection((box, Halfspace(normal, 3.0)))
    raise ValueError(f"unknown example {example_id}")


def generate_instance(
    spec: ExampleSpec, instance_index: int, max_redraws: int = 16
) -> tuple[FractionalBifunction, Intersection]:
    """Instance ``instance_index`` of ``spec``; identical for identical arguments."""
    n = spec.dim
    gen = _generator(spec.seed, instance_index)
    A = gen.random((n, n))
    A1 = gen.random((n, n))
    b = gen.random(n)
    b1 = gen.random(n)
    c = gen.random(n)
    d = float(gen.random())
    for _ in range(max_redraws):
        if np.any(c) or d != 0.0:
            break
        c, d = gen.random(n), float(gen.random())
    else:
        raise DegenerateDraw("c = 0 and d = 0 on every redraw")
    return FractionalBifunction(A, A1, b, b1, c, d), example_sets(spec.example_id, n)


class InstanceRun(NamedTuple):
    index: int
    status: str
    iterations: int
    err1: float
    err2: float
    err3: float
    elapsed_seconds: float
    error: str | None = None


@dataclass
class BenchReport:
    example_id: int
    dim: int
    problem_count: int
    mean_elapsed_seconds: float
    mean_err1: float
    mean_err2: float
    mean_err3: float | None
    solved_fraction: float
    seed: int
    config: SolverConfig
    failure_count: int = 0
    runs: list[InstanceRun] = field(default_factory=list)


def default_threads() -> int:
    raw = os.environ.get("EQP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer EQP_THREADS=%r", raw)
    return os.cpu_count() or 1


def _run_one(spec: ExampleSpec, index: int, cfg: SolverConfig, backend: str) -> InstanceRun:
    try:
        p, s = generate_instance(spec, index)
        out = solve(p, s, np.full(spec.dim, 2.0), cfg, backend=backend)
        err3 = err3_gap(p, out.x_final, s) if spec.example_id == 3 else math.nan
    except EqpError as exc:
        log.warning("instance %d of example %d failed: %s", index, spec.example_id, exc)
        return InstanceRun(index, "failed", 0, math.nan, math.nan, math.nan, 0.0, str(exc))
    return InstanceRun(
        index, out.status.value, out.iterations, out.err1, out.err2, err3, out.elapsed_seconds
    )


def run_benchmark(
    spec: ExampleSpec,
    count: int,
    cfg: SolverConfig | None = None,
    threads: int | None = None,
    backend: str = "auto",
) -> BenchReport:
    """Solve ``count`` generated instances from the all-twos start and average.

    Instances may run concurrently (``threads``, default ``EQP_THREADS`` or
    the core count); aggregation is always in index order. Failed instances
    are excluded from the means and counted in ``failure_count``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    cfg = SolverConfig() if cfg is None else cfg
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1:
        runs = [_run_one(spec, i, cfg, backend) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda i: _run_one(spec, i, cfg, backend), range(count)))
    done = [r for r in runs if r.error is None]

    def mean(values: list[float]) -> float:
        return math.fsum(values) / len(values) if values else math.nan

    return BenchReport(
        example_id=spec.example_id,
        dim=spec.dim,
        problem_count=count,
        mean_elapsed_seconds=mean([r.elapsed_seconds for r in done]),
        mean_err1=mean([r.err1 for r in done]),
        mean_err2=mean([r.err2 for r in done]),
        mean_err3=mean([r.err3 for r in done]) if spec.example_id == 3 else None,
        solved_fraction=mean([1.0 if r.status != "max_iterations" else 0.0 for r in done]),
        seed=spec.seed,
        config=cfg,
        failure_count=count - len(done),
        runs=runs,
    )


def write_report(reports: BenchReport | list[BenchReport], path: str | Path) -> None:
    """One CSV row per report under the fixed header."""
    if isinstance(reports, BenchReport):
        reports = [reports]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for r in reports:
            w.writerow([
                r.example_id, r.dim, r.problem_count, repr(r.mean_elapsed_seconds),
                repr(r.mean_err1), repr(r.mean_err2),
                "" if r.mean_err3 is None else repr(r.mean_err3),
                repr(r.solved_fraction), r.seed,
            ])


def read_report(path: str | Path) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_HEADER:
            raise InstanceFormatError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for line, row in enumerate(reader, start=2):
            try:
                rows.append({
                    "example": int(row["example"]),
                    "dim": int(row["dim"]),
                    "count": int(row["count"]),
                    "mean_time_s": float(row["mean_time_s"]),
                    "mean_err1": float(row["mean_err1"]),
                    "mean_err2": float(row["mean_err2"]),
                    "mean_err3": float(row["mean_err3"]) if row["mean_err3"] else None,
                    "solved_fraction": float(row["solved_fraction"]),
                    "seed": int(row["seed"]),
                })
            except (TypeError, ValueError) as exc:
                raise InstanceFormatError(f"{path}:{line}: {exc}") from exc
        return rows


class Instance(NamedTuple):
    problem: FractionalBifunction
    sets: Intersection
    meta: dict


def instance_to_dict(p: FractionalBifunction, s: Intersection, meta: dict | None = None) -> dict:
    record = p.to_dict()
    record["sets"] = intersection_to_dict(s)
    if meta:
        record["meta"] = dict(meta)
    return record


def instance_from_dict(record: Any, where: str = "instance") -> Instance:
    if not isinstance(record, dict):
        raise InstanceFormatError(f"{where}: top level must be an object")
    p = FractionalBifunction.from_dict(record, where)
    if "sets" not in record:
        raise InstanceFormatError(f"{where}: missing field 'sets'")
    s = intersection_from_dict(record["sets"], f"{where}.sets")
    if s.dim != p.dim:
        raise InstanceFormatError(f"{where}: sets live in R^{s.dim}, problem in R^{p.dim}")
    return Instance(p, s, dict(record.get("meta", {})))


def write_instance(path: str | Path, p: FractionalBifunction, s: Intersection, meta: dict | None = None) -> None:
    # json writes floats with repr, so the file round-trips bit for bit
    Path(path).write_text(json.dumps(instance_to_dict(p, s, meta), indent=1) + "\n")


def read_instance(path: str | Path) -> Instance:
    text = Path(path).read_text()
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return instance_from_dict(record, str(path))
