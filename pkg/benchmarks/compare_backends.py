"""Time the fused numba kernel against the pure-numpy iteration.

    python3 benchmarks/compare_backends.py [--example 1] [--dims 5 10 20 50] [--count 10]

Both backends solve the same generated instances from the same start; the
script reports mean seconds per solve and the largest final-iterate
difference between them.
"""

import argparse
import time

import numpy as np

from eqp import SolverConfig, solve
from eqp.bench import ExampleSpec, generate_instance
from eqp.kernels import NUMBA_INSTALLED


def time_backend(instances, backend, cfg):
    finals = []
    start = time.perf_counter()
    for p, s in instances:
        finals.append(solve(p, s, np.full(p.dim, 2.0), cfg, backend=backend).x_final)
    return (time.perf_counter() - start) / len(instances), finals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--example", type=int, default=1, choices=(1, 2, 3))
    ap.add_argument("--dims", type=int, nargs="+", default=[5, 10, 20, 50])
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not NUMBA_INSTALLED:
        raise SystemExit("numba is not installed")

    cfg = SolverConfig()
    # compile outside the timed region
    warm = generate_instance(ExampleSpec(args.example, max(3, args.dims[0]), args.seed), 0)
    solve(*warm, cfg=cfg, backend="numba")

    print(f"{'n':>4} {'numpy s/solve':>14} {'numba s/solve':>14} {'speedup':>8} {'max |dx|':>10}")
    for n in args.dims:
        instances = [generate_instance(ExampleSpec(args.example, n, args.seed), i) for i in range(args.count)]
        t_np, x_np = time_backend(instances, "numpy", cfg)
        t_nb, x_nb = time_backend(instances, "numba", cfg)
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(x_np, x_nb))
        print(f"{n:>4} {t_np:>14.5f} {t_nb:>14.5f} {t_np / t_nb:>7.1f}x {diff:>10.1e}")


if __name__ == "__main__":
    main()
