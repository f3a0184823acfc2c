"""Time the numba kernels against the numpy fallback on representative inputs.

    python3 benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import time

import numpy as np

from bmcgames import BinaryChannel, likelihood_bank
from bmcgames.kernels import CAPACITY_ITERS, get_impl


def workloads(size: int):
    rng = np.random.default_rng(0)
    a, b = rng.random(size), rng.random(size)
    bank = likelihood_bank([BinaryChannel(0.89, 0.89), BinaryChannel(0.11, 0.11)]).as_array()
    p = np.linspace(0.0, 1.0, 33)
    mu = np.array([[0.45, 0.05, 0.2, 0.3]])
    c = np.array([[0.325, 0.175, 0.325, 0.175]])
    n = 1024
    n0 = rng.binomial(n, 0.5, 200)
    k0 = rng.binomial(n0, 0.4)
    k1 = rng.binomial(n - n0, 0.6)
    words = np.array([[int(v) for v in format(w, "010b")] for w in range(1024) if bin(w).count("1") == 5],
                     dtype=np.int64)
    lw = np.log2([0.9, 0.1, 0.3, 0.7])

    def cap(k):
        return k.capacity_cells(a, b, CAPACITY_ITERS)

    def ratio(k):
        caps, _ = k.capacity_cells(a, b, CAPACITY_ITERS)
        keep = caps > 0
        return lambda: k.ratio_min(p, a[keep], b[keep], caps[keep])

    return {
        f"capacity_cells ({size} channels)": lambda k: (lambda: cap(k)),
        f"ratio_min (33 p x {size})": ratio,
        f"imis_cells ({size} channels, K=2)": lambda k: (lambda: k.imis_cells(0.5, a, b, bank)),
        "oracle_batch (1 instance, 1e6 pts)": lambda k: (
            lambda: k.oracle_batch(mu, c, bank[None], np.array([2]), 10**6)),
        "ensemble_pcorrect (200 trials, n=1024)": lambda k: (
            lambda: k.ensemble_pcorrect(n0, k0, k1, n, 0.5, -1, bank, 0, 2.0**154, 1e-9)),
        "order_violation (n=10, weight 5)": lambda k: (
            lambda: k.order_violation(words, 10, lw, lw + 0.01)),
    }


def best_time(fn, repeat: int) -> float:
    fn()  # warm-up (includes JIT compilation or cache load)
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--size", type=int, default=65536, help="channel cells per call")
    args = parser.parse_args()
    impls = {name: get_impl(name) for name in ("numba", "numpy")}
    print(f"{'kernel':<42}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for label, make in workloads(args.size).items():
        t = {name: best_time(make(k), args.repeat) for name, k in impls.items()}
        print(f"{label:<42}{1e3 * t['numba']:>12.2f}{1e3 * t['numpy']:>12.2f}{t['numpy'] / t['numba']:>8.1f}x")


if __name__ == "__main__":
    main()
