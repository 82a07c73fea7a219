"""Compare the compiled and pure-numpy exact isometry-constant scans.

Usage: python3 benchmarks/bench_rip.py [--repeat N]
"""
import argparse
import math
import time

import numpy as np

from omp_sparse import _fallback, gen_gaussian_matrix, gen_incoherent_matrix

try:
    from omp_sparse import _kernels
except ImportError:  # extension not built
    _kernels = None

CASES = [  # (label, matrix factory, order)
    ("gaussian 8x12", lambda: gen_gaussian_matrix(8, 12, 0), 4),
    ("gaussian 14x14", lambda: gen_gaussian_matrix(14, 14, 1), 5),
    ("gaussian 50x60", lambda: gen_gaussian_matrix(50, 60, 2), 3),
    ("incoherent 50x60", lambda: gen_incoherent_matrix(50, 60, 3), 3),
    ("incoherent 24x30", lambda: gen_incoherent_matrix(24, 30, 4), 4),
]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    print(f"{'case':<18} {'K':>2} {'subsets':>8} {'numpy s':>9} "
          f"{'cython s':>9} {'speedup':>8} {'|diff|':>8}")
    for label, make, order in CASES:
        A = make()
        gram = np.ascontiguousarray(A.gram())
        t_py, res_py = best_time(lambda: _fallback.rip_scan(gram, order), args.repeat)
        if _kernels is None:
            t_cy, diff, speed = math.nan, math.nan, math.nan
        else:
            t_cy, res_cy = best_time(lambda: _kernels.rip_scan(gram, order), args.repeat)
            diff = abs(res_cy[0] - res_py[0])
            speed = t_py / t_cy
        print(f"{label:<18} {order:>2} {math.comb(A.n, order):>8} {t_py:>9.4f} "
              f"{t_cy:>9.4f} {speed:>8.1f} {diff:>8.1e}")


if __name__ == "__main__":
    main()
