"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N]

The numba column is "n/a" when numba is missing or TRAPRES_NO_NUMBA=1.
"""
import argparse
import time

import numpy as np

from trapres import _kernels as K


def _best(fn, repeat):
    fn()  # warm-up (compilation for numba)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def cases():
    rng = np.random.default_rng(0)
    k = complex(4.44, -0.01)
    dx = rng.uniform(-4, 4, (64, 81))
    dy = rng.uniform(-4, 4, (64, 81))
    return {
        "line_remainder p<=20000": (
            lambda: K._line_remainder_numba(k, 2.0, 1.0, 1, 20000, 1, 2),
            lambda: K._line_remainder_numpy(k, 2.0, 1.0, 1, 20000, 1, 2)),
        "strip_remainder p<=400": (
            lambda: K._strip_remainder_numba(0.1, 0.3, -0.2, 0.5, k, 2.0, 1.0, 400),
            lambda: K._strip_remainder_numpy(0.1, 0.3, -0.2, 0.5, k, 2.0, 1.0, 400)),
        "image_table 64x81 j<=6": (
            lambda: K._image_table_numba(dx, dy, 3.0, 6, np.zeros((7, 64))),
            lambda: K._image_table_numpy(dx, dy, 3.0, 6, np.zeros((7, 64)))),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    print(f"backend: {K.BACKEND}")
    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, (fnb, fnp) in cases().items():
        tp = _best(fnp, args.repeat)
        diff = float(np.max(np.abs(np.asarray(fnb()) - np.asarray(fnp()))))
        if K.HAVE_NUMBA:
            tb = _best(fnb, args.repeat)
            print(f"{name:28s} {tb * 1e3:11.3f} {tp * 1e3:11.3f} {tp / tb:8.1f} {diff:9.1e}")
        else:
            print(f"{name:28s} {'n/a':>11s} {tp * 1e3:11.3f} {'':>8s} {diff:9.1e}")


if __name__ == "__main__":
    main()
