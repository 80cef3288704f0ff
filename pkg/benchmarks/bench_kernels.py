"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, backend) with the best wall time and the
speed-up of compiled over python. Both backends are checked for agreement
before timing.
"""
import argparse
import timeit

import numpy as np

from epsstar._backend import BACKENDS


def cases(rng):
    pop = np.sort(rng.gamma(5, 5, 100_000))
    train = np.sort(rng.gamma(2, 5, 100_000))
    q = rng.uniform(0, 60, 1_000_000)
    t = np.linspace(1e-6, 1 - 1e-6, 2_000_000)
    eta = 1 - t**0.5
    x = rng.uniform(0, 40, 200_000)
    return {
        "count_le (1e5 sorted, 1e6 queries)": lambda m: m.count_le(pop, q),
        "ks_statistic (1e5 vs 1e5)": lambda m: m.ks_statistic(train, pop),
        "discrete_max (2e6 pairs)": lambda m: m.discrete_max(t, 1 - t, eta, 1 - eta, 1e-5),
        "gammainc_pq (k=5, 2e5 points)": lambda m: m.gammainc_pq(5.0, x),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "compiled" not in BACKENDS:
        print("compiled backend not built; only the python fallback is available")
    for name, fn in cases(np.random.default_rng(0)).items():
        outs = {b: fn(m) for b, m in BACKENDS.items()}
        if len(outs) == 2 and not same(outs["python"], outs["compiled"]):
            raise SystemExit(f"{name}: backends disagree")
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
                 for b, m in BACKENDS.items()}
        for b, sec in times.items():
            print(f"{name:40s} {b:9s} {sec * 1e3:9.2f} ms")
        if len(times) == 2:
            print(f"{name:40s} speed-up  {times['python'] / times['compiled']:8.2f}x")


if __name__ == "__main__":
    main()
