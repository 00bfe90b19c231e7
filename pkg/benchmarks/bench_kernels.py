"""Compare the compiled and pure-numpy kernels on free-dynamics runs.

    python3 benchmarks/bench_kernels.py [--sizes 17 50 200] [--steps 2000]
"""
import argparse
import time

import numpy as np

from hthk import _kernels


def bench(fn, y, r, steps, repeat):
    fn(y, r, 0.0, np.ones((1, 1), bool), False, 5, -1.0)  # compile / warm caches
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(y, r, 0.0, np.ones((1, 1), bool), False, steps, -1.0)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[17, 50, 200, 500])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'numpy s':>10} {'numba s':>10} {'speedup':>8}  identical")
    for n in args.sizes:
        y = rng.uniform(0, 1, n)
        r = rng.uniform(0.01, 0.2, n)
        t_np, a = bench(_kernels.run_chunk_numpy, y, r, args.steps, args.repeat)
        t_nb, b = bench(_kernels.run_chunk_numba, y, r, args.steps, args.repeat)
        print(f"{n:>6} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}  {np.array_equal(a, b)}")


if __name__ == "__main__":
    main()
