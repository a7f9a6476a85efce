"""Wall-time comparison of the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is run once untimed (JIT warm-up), then ``--repeat`` times;
the best time is reported with the largest absolute difference between
the two backends' outputs (summation order differs, so float kernels agree
to round-off; the simulation kernel is bit-identical).
"""

import argparse
import time

import numpy as np

from couponlab import _accel, _kernels
from couponlab.dist_engine import build_distribution


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases():
    uni = build_distribution("uniform", 12, 6)
    m, p = uni.masks(), uni.float_probs()
    arcs = build_distribution("arcs", 10, 5)
    return [
        ("dp_expected uniform(12,6)", lambda b: _kernels.dp_expected(12, m, p, backend=b)),
        ("rounds_cdf uniform(12,6) k=40", lambda b: _kernels.rounds_cdf(12, m, p, 40, backend=b)[0]),
        ("fd_gradient arcs(10,5)", lambda b: _kernels.fd_gradient(10, arcs.masks(), arcs.float_probs(), backend=b)),
        ("hypergeom_kernel n=2048 s=1024", lambda b: _kernels.hypergeom_kernel(2048, 1024, 1024, backend=b)),
        ("simulate uniform(100,10) 1e5", lambda b: _kernels.simulate(100, 10, True, np.zeros((1, 1)), np.ones(1),
                                                                     7, 100_000, backend=b)),
        ("simulate arcs(10,5) 1e5", lambda b: _kernels.simulate(10, 5, False, arcs.coupon_table(),
                                                                np.cumsum(arcs.float_probs()), 7, 100_000, backend=b)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':34s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}  max |diff|")
    for name, fn in cases():
        tn, a = best_of(lambda: fn("numba"), args.repeat)
        tp, b = best_of(lambda: fn("numpy"), args.repeat)
        diff = float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
        print(f"{name:34s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
