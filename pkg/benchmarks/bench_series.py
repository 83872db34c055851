"""Compare the compiled series kernel against the numpy fallback.

    python benchmarks/bench_series.py [--points 20000] [--repeat 5]

Both kernels evaluate the same odd-harmonic sums; the script reports the
agreement and the best-of-N wall time for a few representative regimes.
"""
import argparse
import time

import numpy as np

from biotlab import _series_py

try:
    from biotlab import _series
except ImportError:
    _series = None

CASES = [
    # (label, s range, power, use_cos)
    ("pressure, early times", (1e-8, 1e-5), -1, False),
    ("pressure, late times", (1e-2, 1.0), -1, False),
    ("gradient, early times", (1e-8, 1e-5), 0, True),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--terms", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _series is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'case':24s} {'numpy [s]':>10s} {'compiled [s]':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for label, (lo, hi), power, use_cos in CASES:
        x = rng.uniform(0, np.pi / 2, args.points)
        s = np.exp(rng.uniform(np.log(lo), np.log(hi), args.points))
        t_py, ref = best_of(lambda: _series_py.sine_series(x, s, args.terms, power, use_cos), args.repeat)
        t_c, got = best_of(lambda: _series.sine_series(x, s, args.terms, power, use_cos), args.repeat)
        diff = np.max(np.abs(got - ref)) / np.max(np.abs(ref))
        print(f"{label:24s} {t_py:10.4f} {t_c:12.4f} {t_py / t_c:8.1f} {diff:13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
