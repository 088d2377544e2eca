"""Compare the numba and numpy implementations of the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--sizes 1000,10000,50000]

Prints one line per (kernel, size) with the best wall time of each backend,
the speed-up and the largest disagreement between the two results.
"""

import argparse
import time

import numpy as np

from tamegeo import _accel


def best_time(fn, *args, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def curve_cloud(n, rng):
    # points on a noisy parabola, the typical shape of a sampled curve
    x = np.sort(rng.uniform(-1, 1, n))
    return np.c_[x, x ** 2 + 1e-3 * rng.normal(size=n)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="1000,10000,50000")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    sizes = [int(s) for s in args.sizes.split(",")]

    if not _accel.HAVE_NUMBA:
        print("numba unavailable (or TAMEGEO_NO_NUMBA set): timing the numpy path only")
    else:
        _accel.warmup()

    print(f"{'kernel':<16}{'n':>8}{'numpy [s]':>12}{'numba [s]':>12}{'speed-up':>10}{'max |diff|':>12}")
    for n in sizes:
        P = curve_cloud(n, rng)
        Q = curve_cloud(n, rng)
        t_np, d_np = best_time(_accel._min_dist_numpy, Q, P, repeat=args.repeat)
        if _accel.HAVE_NUMBA:
            t_nb, d_nb = best_time(_accel._min_dist_numba, Q, P, repeat=args.repeat)
            diff = float(np.abs(d_np - d_nb).max())
            print(f"{'min_dist':<16}{n:>8}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.1e}")
        else:
            print(f"{'min_dist':<16}{n:>8}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>12}")

        G = rng.normal(size=(min(n, 20000), 2))
        t_np, (l_np, _) = best_time(_accel._greedy_cluster_numpy, G, 0.05, repeat=args.repeat)
        if _accel.HAVE_NUMBA:
            t_nb, (l_nb, _) = best_time(_accel._greedy_cluster_numba, G, 0.05, repeat=args.repeat)
            same = int((l_np != l_nb).sum())
            print(f"{'greedy_cluster':<16}{len(G):>8}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{same:>12d}")
        else:
            print(f"{'greedy_cluster':<16}{len(G):>8}{t_np:>12.4f}{'-':>12}{'-':>10}{'-':>12}")


if __name__ == "__main__":
    main()
