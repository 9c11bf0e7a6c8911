"""Numba vs plain numpy for the hot kernels.

Two measurements:
  1. the per-step solver (pg_solve) and the DARE iteration, compiled vs
     ``.py_func`` in the same process;
  2. a full Experiment-1 seed (all four controllers) end to end, once normally
     and once in a subprocess with ALICECTL_NUMBA=0.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--seeds N]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from alicectl import kernels
from alicectl._jit import USE_NUMBA
from alicectl.bench.config import LAPLACIAN_A

SEED_RUN = (
    "import time; from alicectl.bench.config import preset; from alicectl.bench.runner import run_rollouts;"
    "cfg = preset('exp1', seeds={seeds}); run_rollouts(preset('exp1', seeds=1, horizon=5));"
    "t0 = time.perf_counter(); run_rollouts(cfg); print(time.perf_counter() - t0)"
)


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def solver_case(seed=0, n=3):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((20, n))
    S = X.T @ X
    C = rng.standard_normal((n, n)) @ S
    c, x = rng.standard_normal(n), rng.standard_normal(n)
    r = 0.5 * np.linalg.norm(c)
    return (S, C, 1.0, np.zeros((n, n)), np.zeros((n, n)), np.eye(n), c, x, r, True,
            1e-3, 1e-12, 10.0, 1.0, 1e-8, 5000)


def time_seed_run(seeds, numba_on):
    env = dict(os.environ, ALICECTL_NUMBA="1" if numba_on else "0")
    out = subprocess.run([sys.executable, "-c", SEED_RUN.format(seeds=seeds)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    if not USE_NUMBA:
        sys.exit("numba is disabled in this process; unset ALICECTL_NUMBA")

    args_pg = solver_case()
    kernels.pg_solve(*args_pg)  # compile / load cache
    Q, R = 10.0 * np.eye(3), np.eye(3)
    dare_args = (LAPLACIAN_A, np.eye(3), Q, R, 1e-12, 100_000)
    kernels.dare_iterate(*dare_args)

    rows = [
        ("pg_solve (n=3)", lambda: kernels.pg_solve(*args_pg), lambda: kernels.pg_solve.py_func(*args_pg)),
        ("dare_iterate (n=3)", lambda: kernels.dare_iterate(*dare_args),
         lambda: kernels.dare_iterate.py_func(*dare_args)),
    ]
    print(f"{'kernel':<22}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, fast, slow in rows:
        a = best_of(fast, args.repeats) * 1e3
        b = best_of(slow, max(1, args.repeats // 4)) * 1e3
        print(f"{name:<22}{a:>12.3f}{b:>12.3f}{b / a:>9.1f}x")

    a = time_seed_run(args.seeds, True)
    b = time_seed_run(args.seeds, False)
    print(f"{f'exp1, {args.seeds} seeds':<22}{a * 1e3:>12.0f}{b * 1e3:>12.0f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
