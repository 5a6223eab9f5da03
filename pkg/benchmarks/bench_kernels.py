"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs with both backends; outputs are checked
for bit-identity before timing.
"""

import argparse
import math
import timeit

import numpy as np

from nestkit import kernels
from nestkit.kernels import fallback


def _cone(u):
    return -float(np.sum((2.0 * u - 1.0) ** 2))


def cases(n_dead=20_000, n_live=500, d=4):
    gen = np.random.default_rng(0)
    ll = np.sort(gen.normal(size=n_dead + n_live))
    birth = np.full(n_dead + n_live, -math.inf)
    # later deaths were born at earlier death contours
    birth[n_live:] = ll[:n_dead]
    order = np.argsort(ll)
    ll, birth = ll[order], birth[order]
    replay_args = (ll[:n_dead], birth[:n_dead], ll[n_dead:], birth[n_dead:])
    log_x = -np.arange(1, n_dead + 1) / n_live
    axes = np.linalg.qr(gen.normal(size=(d, d)))[0].T.copy()
    widths = np.full(d, 0.3)
    u0 = np.full(d, 0.5)
    return {
        "replay": lambda impl: impl.replay(*replay_args),
        "log_trapezium_weights": lambda impl: impl.log_trapezium_weights(log_x, True),
        "slice_walk": lambda impl: impl.slice_walk(u0, axes, widths, -0.5, _cone,
                                                   np.random.default_rng(1), 200, 1000),
        "random_walk": lambda impl: impl.random_walk(u0, _cone(u0), 0.1, -0.5, _cone,
                                                     np.random.default_rng(1), 500),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled backend not built; only the fallback is available")
        return 1
    print(f"{'kernel':<24}{'python ms':>12}{'compiled ms':>14}{'speed-up':>10}  identical")
    for name, call in cases().items():
        ident = same(call(fallback), call(kernels.compiled))
        t_py = min(timeit.repeat(lambda: call(fallback), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: call(kernels.compiled), number=1, repeat=args.repeat))
        print(f"{name:<24}{1e3 * t_py:>12.2f}{1e3 * t_c:>14.2f}{t_py / t_c:>10.1f}  {ident}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
