"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 1048576] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from anisonls import _kernels_py, kernels

try:
    from anisonls import _kernels as _compiled
except ImportError:
    _compiled = None


def _cases(n, rng):
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v = rng.standard_normal(n) * 1e3
    amp, ph = rng.random(n), rng.uniform(-50, 50, n)
    return {
        "nonlinear_phase": lambda impl: kernels.nonlinear_phase_(u.copy(), 0.3, 2.0, impl=impl),
        "power_nonlinearity(p=3)": lambda impl: kernels.power_nonlinearity(u, 3.0, impl=impl),
        "cubic_root": lambda impl: kernels.cubic_root(v, impl=impl),
        "polar": lambda impl: kernels.polar(amp, ph, impl=impl),
        "abs2_sum": lambda impl: kernels.abs2_sum(u, impl=impl),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1 << 20)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':26s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, fn in _cases(args.size, rng).items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _compiled is None:
            print(f"{name:26s} {tp:10.2f} {'n/a':>12s}")
            continue
        tc = min(timeit.repeat(lambda: fn(_compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:26s} {tp:10.2f} {tc:12.2f} {tp / tc:8.2f}x")


if __name__ == "__main__":
    main()
