"""Benchmark the OU path kernel: numba backend vs the pure-numpy fallback.

Run with ``python benchmarks/bench_ou.py``.  The same workload (pre-drawn
normals, exact per-step transition) is timed on both backends; the numba
kernel parallelizes over paths with prange, the numpy path vectorizes over
paths inside the step loop.
"""

import argparse
import time

import numpy as np

from graphheat import _kernels


def _workload(n_paths: int, n_steps: int, n_modes: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n_paths, n_steps, n_modes))
    lam = -np.linspace(0.0, 400.0, n_modes)
    dt = 1.0 / n_steps
    decay = np.exp(lam * dt)
    P = rng.standard_normal((n_modes, n_modes)) * 0.01
    z0 = np.zeros(n_modes)
    out_steps = np.array([n_steps // 2, n_steps])
    return w, decay, P, z0, out_steps


def _time(fn, args, repeats: int) -> float:
    fn(*args)  # warm-up (jit compilation for the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--modes", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    work = _workload(args.paths, args.steps, args.modes)
    t_np = _time(_kernels._ou_paths_numpy, work, args.repeats)
    print(f"numpy : {t_np:8.4f} s  ({args.paths} paths x {args.steps} steps x {args.modes} modes)")
    if _kernels.NUMBA_ENABLED:
        t_nb = _time(_kernels._ou_paths_numba, work, args.repeats)
        print(f"numba : {t_nb:8.4f} s  (speedup {t_np / t_nb:.2f}x)")
        a = _kernels._ou_paths_numpy(*work)
        b = _kernels._ou_paths_numba(*work)
        print(f"max abs diff between backends: {np.max(np.abs(a - b)):.3e}")
    else:
        print("numba backend disabled (GRAPHHEAT_NO_NUMBA set or numba missing)")


if __name__ == "__main__":
    main()
