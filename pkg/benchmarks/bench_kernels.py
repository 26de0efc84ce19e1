"""Time the numba and numpy kernel backends on GBDT-shaped workloads.

Measures the four tree kernels at training shapes (histogram build, split
scan, row partition, forest predict) plus the ARMA residual recursion, checks
that both backends return bitwise-identical outputs, and prints one table.

Usage:
    python3 benchmarks/bench_kernels.py [--rows 1880] [--features 61]
                                        [--repeats 7]
"""

import argparse
import time

import numpy as np

from htsf import kernels
from htsf.forecasters.gbdt import GbdtParams, bin_features, fit_gbdt, _flatten
from htsf.forecasters.tweedie import tweedie_grad_hess


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def build_workloads(rows, features, seed=7):
    rng = np.random.default_rng(seed)
    X = rng.gamma(2.0, 3.0, size=(rows, features))
    y = rng.poisson(5.0, size=rows).astype(np.float64)
    codes, _ = bin_features(X, max_bins=255)
    grad, hess = tweedie_grad_hess(y, np.full(rows, np.log(5.0)), 1.5)
    feats = np.arange(features, dtype=np.int64)
    all_rows = np.arange(rows, dtype=np.int64)

    model = fit_gbdt(
        X, y, GbdtParams(num_rounds=20, learning_rate=0.1, max_leaves=31, seed=seed)
    )
    forest = _flatten(model.trees)

    w = rng.normal(size=5000)
    phi = np.array([0.6])
    theta = np.array([0.3])

    return {
        "build_histograms": lambda: kernels.build_histograms(
            codes, all_rows, feats, grad, hess, 255
        ),
        "best_split": lambda hgh=kernels.build_histograms(
            codes, all_rows, feats, grad, hess, 255
        ): kernels.best_split(*hgh, 1.0, 20),
        "partition_rows": lambda: kernels.partition_rows(codes, 0, all_rows, 128),
        "predict_forest": lambda: kernels.predict_forest(X, *forest),
        "css_residuals": lambda: kernels.css_residuals(w, 0.01, phi, theta),
    }


def as_tuple(out):
    if isinstance(out, tuple):
        return tuple(np.asarray(o).tobytes() for o in out)
    return (np.asarray(out).tobytes(),)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=1880)
    ap.add_argument("--features", type=int, default=61)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}   "
          f"(rows={args.rows}, features={args.features}, best of {args.repeats})")
    if "numba" in backends:
        with kernels.use_backend("numba"):  # trigger JIT before timing
            for fn in build_workloads(64, 4).values():
                fn()

    results = {}
    outputs = {}
    for backend in backends:
        with kernels.use_backend(backend):
            work = build_workloads(args.rows, args.features)
            for name, fn in work.items():
                secs, out = timeit(fn, args.repeats)
                results[(backend, name)] = secs
                outputs.setdefault(name, {})[backend] = as_tuple(out)

    for name, per_backend in outputs.items():
        vals = set(per_backend.values())
        if len(vals) != 1:
            raise SystemExit(f"backend outputs differ for {name}")
    print("bitwise agreement: OK")

    names = list(outputs.keys())
    header = f"{'kernel':<18}" + "".join(f"{b + ' (ms)':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name in names:
        row = f"{name:<18}"
        times = [results[(b, name)] for b in backends]
        row += "".join(f"{t * 1e3:>14.3f}" for t in times)
        if len(times) == 2:
            slow, fast = max(times), min(times)
            winner = backends[int(times.index(fast))]
            row += f"{slow / fast:>8.1f}x {winner}"
        print(row)


if __name__ == "__main__":
    main()
