"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the per-sample hot path (moment update, shared covariance, shrunk
inversion, discriminant scores) for each available backend and prints a
throughput table. The numba timings exclude the one-off JIT compilation,
which is what steady-state streaming sees.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--sizes 5x16,10x64]
"""

import argparse
import time

import numpy as np

from dota._kernels import available_backends


def run_loop(impl, k, d, n, rng):
    means = rng.normal(size=(k, d))
    covs = np.tile(0.002 * np.eye(d), (k, 1, 1))
    counts = np.ones(k)
    xs = rng.normal(size=(n, d))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    idx = np.arange(min(3, k), dtype=np.int64)
    wts = np.full(idx.size, 1.0 / idx.size)
    start = time.perf_counter()
    for i in range(n):
        impl["update_perclass"](means, covs, counts, xs[i], idx, wts, False)
        sigma_bar = impl["shared_cov"](covs)
        prec = impl["shrink_invert"](sigma_bar, 1e-4)
        impl["discriminant"](means, prec, xs[i])
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000,
                        help="samples per measurement")
    parser.add_argument("--sizes", default="5x16,10x64,50x128",
                        help="comma-separated KxD pairs")
    args = parser.parse_args()

    backends = available_backends()
    sizes = []
    for token in args.sizes.split(","):
        k, d = token.lower().split("x")
        sizes.append((int(k), int(d)))

    rng = np.random.default_rng(0)
    # warm-up pass compiles the numba kernels outside the timed region
    for impl in backends.values():
        run_loop(impl, 3, 8, 5, rng)

    header = f"{'K x D':>10} | " + " | ".join(f"{name:>16}" for name in backends)
    print(header)
    print("-" * len(header))
    for k, d in sizes:
        cells = []
        for name, impl in backends.items():
            seconds = run_loop(impl, k, d, args.n, np.random.default_rng(1))
            cells.append(f"{args.n / seconds:>10.0f} it/s")
        print(f"{f'{k} x {d}':>10} | " + " | ".join(f"{c:>16}" for c in cells))


if __name__ == "__main__":
    main()
