#!/usr/bin/env python3
"""Benchmark the split-scan backends on a forest-training workload.

Fits the same forest with the compiled kernel and the NumPy fallback,
verifies the resulting trees are identical, and reports wall time. This is
the hot path of recursive feature elimination, which refits a forest every
round.

    python3 bench/bench_split.py --rows 1368 --features 240 --classes 36
"""

import argparse
import json
import time

import numpy as np

from archprobe._kernels import available_backends
from archprobe.classifiers import HyperParams, forest, predictor_to_dict, train


def bench_backend(name, scan_fn, X, y, hyper, repeats):
    original = forest.scan_best_split
    forest.scan_best_split = scan_fn
    try:
        fitted = train("random_forest", X, y, hyper=hyper, seed=0)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            fitted = train("random_forest", X, y, hyper=hyper, seed=0)
            times.append(time.perf_counter() - t0)
    finally:
        forest.scan_best_split = original
    return min(times), fitted


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=1368)
    ap.add_argument("--features", type=int, default=240)
    ap.add_argument("--classes", type=int, default=36)
    ap.add_argument("--trees", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    y_codes = np.repeat(np.arange(args.classes), args.rows // args.classes + 1)[: args.rows]
    X = rng.normal(size=(args.rows, args.features))
    # three strongly informative columns so trees have real structure
    for j in range(3):
        X[:, j] += y_codes * (j + 1) * 0.7
    y = [f"class_{c:02d}" for c in y_codes]
    hyper = HyperParams(forest_trees=args.trees)

    backends = available_backends()
    print(f"backends available: {', '.join(sorted(backends))}")
    print(
        f"workload: {args.rows} rows x {args.features} features, "
        f"{args.classes} classes, {args.trees} trees (best of {args.repeats})"
    )

    results = {}
    models = {}
    for name in sorted(backends):
        elapsed, fitted = bench_backend(name, backends[name], X, y, hyper, args.repeats)
        results[name] = elapsed
        models[name] = json.dumps(predictor_to_dict(fitted), sort_keys=True)
        print(f"  {name:10s} {elapsed * 1000:9.1f} ms/fit")

    if len(results) == 2:
        speedup = results["python"] / results["compiled"]
        print(f"  speedup    {speedup:9.2f}x (compiled over python)")
        identical = models["python"] == models["compiled"]
        print(f"  forests bit-identical across backends: {identical}")
        if not identical:
            raise SystemExit("backend outputs diverged")


if __name__ == "__main__":
    main()
