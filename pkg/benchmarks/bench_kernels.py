"""Compiled vs numpy Bessel kernels.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 3]

Times ``bessel01`` on each argument regime plus a Nystrom single-layer
assembly, for both backends, and checks that they agree.
"""

import argparse
import time

import numpy as np

from nearcloak import geometry, kernels
from nearcloak.kernels import _hankel_py

try:
    from nearcloak.kernels import _hankel_ext
except ImportError:  # extension not built
    _hankel_ext = None

REGIMES = {"series (0, 4]": (1e-3, 4.0), "recurrence (4, 20)": (4.0, 20.0), "asymptotic [20, 100]": (20.0, 100.0)}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _hankel_ext is None:
        print("compiled extension not available; only the numpy backend can be timed")
    rng = np.random.default_rng(0)
    print(f"{'regime':24s} {'numpy [s]':>10s} {'compiled [s]':>13s} {'speedup':>8s} {'max abs diff':>13s}")
    for name, (lo, hi) in REGIMES.items():
        t = rng.uniform(lo, hi, args.n)
        tp = best_of(lambda: _hankel_py.bessel01(t), args.repeat)
        if _hankel_ext is None:
            print(f"{name:24s} {tp:10.3f}")
            continue
        tc = best_of(lambda: _hankel_ext.bessel01(t), args.repeat)
        a = np.array(_hankel_py.bessel01(t))
        b = np.array(_hankel_ext.bessel01(t))
        diff = np.max(np.abs(a - b))
        print(f"{name:24s} {tp:10.3f} {tc:13.3f} {tp / tc:8.2f} {diff:13.2e}")
    # end-to-end: on-curve single layer, dominated by the Bessel evaluations
    from nearcloak.potentials import single_layer_on

    curve = geometry.make_kite((0.0, 0.0), 1.0, 512)
    for backend in ("python", "compiled"):
        if backend == "compiled" and _hankel_ext is None:
            continue
        saved = kernels._impl
        kernels._impl = _hankel_py if backend == "python" else _hankel_ext
        try:
            secs = best_of(lambda: single_layer_on(curve, 5.0), args.repeat)
        finally:
            kernels._impl = saved
        print(f"single layer, 512 nodes, {backend:8s}: {secs:.3f} s")


if __name__ == "__main__":
    main()
