"""Random forest with Gini-split trees.

Trees grow to purity (or to ``forest_min_leaf``) on bootstrap samples,
choosing each split from a fresh random subset of sqrt(d) features. The
split scan itself runs in the compiled kernel when available. Per-tree RNG
streams are derived from (seed, tree index), so any thread count produces
the same forest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .._kernels import scan_best_split
from ._common import tree_rng


def _n_subset_features(max_features, d: int) -> int:
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if max_features == "all":
        return d
    return max(1, min(d, int(max_features)))


def _gini(counts: np.ndarray, n: int) -> float:
    sumsq = int((counts.astype(np.int64) ** 2).sum())
    return 1.0 - sumsq / (n * n)


def grow_tree(X, y, n_classes, rng, max_features="sqrt", min_leaf=1,
              bootstrap=True, importances=None):
    """Grow one tree; returns dict of parallel node arrays.

    ``feature`` is -1 at leaves, ``leaf`` is -1 at internal nodes. When a
    sampled feature subset admits no valid split the node becomes a
    (possibly impure) leaf labeled with its majority class, smallest class
    code first on ties.
    """
    n, d = X.shape
    m = _n_subset_features(max_features, d)
    idx0 = np.sort(rng.integers(0, n, size=n)) if bootstrap else np.arange(n)
    n_total = len(idx0)

    feature, threshold, left, right, leaf = [], [], [], [], []
    stack = [(idx0, -1, False)]
    while stack:
        idx, parent, is_right = stack.pop()
        nid = len(feature)
        if parent >= 0:
            if is_right:
                right[parent] = nid
            else:
                left[parent] = nid
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)

        counts = np.bincount(y[idx], minlength=n_classes)
        majority = int(np.argmax(counts))
        n_node = len(idx)
        if counts[majority] == n_node or n_node < 2 * min_leaf:
            leaf.append(majority)
            continue

        feats = np.sort(rng.choice(d, size=m, replace=False))
        xf = X[np.ix_(idx, feats)]
        order = np.argsort(xf, axis=0, kind="stable")
        col, thr, _ = scan_best_split(xf, order, y[idx], n_classes, min_leaf)
        if col < 0:
            leaf.append(majority)
            continue

        f = int(feats[col])
        go_left = X[idx, f] <= thr
        idx_l, idx_r = idx[go_left], idx[~go_left]

        if importances is not None:
            cl = np.bincount(y[idx_l], minlength=n_classes)
            cr = counts - cl
            nl, nr = len(idx_l), len(idx_r)
            decrease = (
                n_node * _gini(counts, n_node)
                - nl * _gini(cl, nl)
                - nr * _gini(cr, nr)
            ) / n_total
            importances[f] += decrease

        feature[-1] = f
        threshold[-1] = float(thr)
        leaf.append(-1)
        stack.append((idx_r, nid, True))
        stack.append((idx_l, nid, False))

    return {
        "feature": np.asarray(feature, dtype=np.int64),
        "threshold": np.asarray(threshold, dtype=np.float64),
        "left": np.asarray(left, dtype=np.int64),
        "right": np.asarray(right, dtype=np.int64),
        "leaf": np.asarray(leaf, dtype=np.int64),
    }


def tree_apply(tree, X) -> np.ndarray:
    """Leaf class code for each row, descending all rows level by level."""
    X = np.atleast_2d(X)
    node = np.zeros(X.shape[0], dtype=np.int64)
    feature, threshold = tree["feature"], tree["threshold"]
    left, right = tree["left"], tree["right"]
    while True:
        internal = feature[node] >= 0
        if not internal.any():
            break
        rows = np.nonzero(internal)[0]
        cur = node[rows]
        go_left = X[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
    return tree["leaf"][node]


def fit_forest(X, y, n_classes, hyper, seed, workers=1):
    """Returns params dict: trees, per-feature importances, vote metadata."""
    d = X.shape[1]
    T = hyper.forest_trees

    def build(t):
        imp = np.zeros(d)
        tree = grow_tree(
            X,
            y,
            n_classes,
            tree_rng(seed, t),
            max_features=hyper.forest_max_features,
            min_leaf=hyper.forest_min_leaf,
            bootstrap=hyper.forest_bootstrap,
            importances=imp,
        )
        return tree, imp

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(build, range(T)))
    else:
        results = [build(t) for t in range(T)]

    trees = [tree for tree, _ in results]
    importances = np.zeros(d)
    for _, imp in results:
        importances += imp
    importances /= T
    return {"trees": trees, "importances": importances, "n_features": d}


def forest_scores_batch(params, X, n_classes) -> np.ndarray:
    """Per-row fraction of trees voting each class; rows sum to 1."""
    X = np.atleast_2d(X)
    votes = np.zeros((X.shape[0], n_classes))
    rows = np.arange(X.shape[0])
    for tree in params["trees"]:
        votes[rows, tree_apply(tree, X)] += 1.0
    return votes / len(params["trees"])
