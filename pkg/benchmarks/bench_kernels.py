"""Time the compiled and pure-Python kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Prints one row per (kernel, size, backend) with the best wall time of
``--repeat`` runs and the speed-up of the compiled backend.  Outputs of
both backends are checked to agree before timing.
"""

import argparse
import time

import numpy as np

from ftmkit._accel import available_backends
from ftmkit.correction import _prefix_stats
from ftmkit.ml.kernels import KernelParams, gram


def tree_case(n, rng):
    X = rng.normal(size=(n, 2))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=n)
    return (X, y, 4)


def smo_case(n, rng):
    X = rng.normal(size=(n, 2))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + 0.1 * rng.normal(size=n)
    return (gram(X, X, KernelParams()), y, 10.0, 0.1, 1e-3, 10**6)


def grid_case(n, rng):
    x = np.sort(rng.uniform(0, 200, n))
    y = np.where(x < 10, 0.95 * x, np.where(x < 124, 0.8 * x - 2, 0.95 * x - 20.6)) + rng.normal(0, 0.1, n)
    cuts = (np.flatnonzero(x[1:] > x[:-1]) + 1).astype(np.int64)
    return (_prefix_stats(x, y), cuts, 2, 2)


CASES = {
    "build_tree": (tree_case, (500, 2000)),
    "smo_solve": (smo_case, (100, 300)),
    "segmented_grid_search": (grid_case, (200, 800)),
}


def best_time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, atol=1e-6)
    if isinstance(a, float):
        return abs(a - b) <= 1e-6 * max(1.0, abs(a))
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only timing the fallback")
    print(f"{'kernel':24s} {'n':>6s} {'backend':>8s} {'seconds':>10s} {'speedup':>8s}")
    for name, (make, sizes) in CASES.items():
        for n in sizes:
            case = make(n, np.random.default_rng(n))
            ref = getattr(backends["python"], name)(*case)
            times = {}
            for bname, mod in backends.items():
                fn = getattr(mod, name)
                if bname != "python" and not _same(ref, fn(*case)):
                    print(f"warning: {name} n={n}: {bname} disagrees with the fallback")
                times[bname] = best_time(fn, case, args.repeat)
            for bname, t in times.items():
                speed = times["python"] / t
                print(f"{name:24s} {n:6d} {bname:>8s} {t:10.4f} {speed:7.1f}x")


if __name__ == "__main__":
    main()
