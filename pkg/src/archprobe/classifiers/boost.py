"""SAMME AdaBoost over depth-1 decision stumps.

Each round fits the stump minimizing weighted child Gini impurity over all
features and boundaries (columns presorted once), then reweights rows by
the stump's weighted error. Stops early when a stump is no better than
chance or fits perfectly.
"""

from __future__ import annotations

import numpy as np


def _best_weighted_stump(X, order, y, w, n_classes):
    """Exhaustive weighted-Gini stump search.

    Returns (feature, threshold, left_class, right_class, err) or None
    when no feature has two distinct values.
    """
    n, d = X.shape
    best = None
    best_good = -np.inf
    total_w = np.zeros(n_classes)
    np.add.at(total_w, y, w)
    for j in range(d):
        o = order[:, j]
        vs = X[o, j]
        boundary = vs[1:] != vs[:-1]
        if not boundary.any():
            continue
        wh = np.zeros((n, n_classes))
        wh[np.arange(n), y[o]] = w[o]
        cw_l = np.cumsum(wh, axis=0)[:-1]
        cw_r = total_w[None, :] - cw_l
        wl = cw_l.sum(axis=1)
        wr = cw_r.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            good = np.where(
                boundary & (wl > 0.0) & (wr > 0.0),
                (cw_l**2).sum(axis=1) / wl + (cw_r**2).sum(axis=1) / wr,
                -np.inf,
            )
        p = int(np.argmax(good))
        g = float(good[p])
        if g > best_good:
            a, b = float(vs[p]), float(vs[p + 1])
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            left_class = int(np.argmax(cw_l[p]))
            right_class = int(np.argmax(cw_r[p]))
            pred = np.where(X[:, j] <= thr, left_class, right_class)
            err = float(w[pred != y].sum())
            best = (j, thr, left_class, right_class, err)
            best_good = g
    return best


def fit_adaboost(X, y, n_classes, hyper, seed):
    n, d = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    w = np.full(n, 1.0 / n)
    features, thresholds, lefts, rights, alphas = [], [], [], [], []
    for _ in range(hyper.adaboost_stumps):
        stump = _best_weighted_stump(X, order, y, w, n_classes)
        if stump is None:
            break
        j, thr, lc, rc, err = stump
        if err >= 1.0 - 1.0 / n_classes:
            # no better than chance under SAMME; a first such stump would
            # get non-positive weight, so stop
            break
        err = max(err, 1e-16)
        alpha = float(np.log((1.0 - err) / err) + np.log(n_classes - 1.0))
        features.append(j)
        thresholds.append(thr)
        lefts.append(lc)
        rights.append(rc)
        alphas.append(alpha)
        if err <= 1e-16:
            break
        pred = np.where(X[:, j] <= thr, lc, rc)
        w = w * np.exp(alpha * (pred != y))
        w = w / w.sum()
    importances = np.zeros(d)
    for j, alpha in zip(features, alphas):
        importances[j] += alpha
    return {
        "features": np.asarray(features, dtype=np.int64),
        "thresholds": np.asarray(thresholds, dtype=np.float64),
        "left_classes": np.asarray(lefts, dtype=np.int64),
        "right_classes": np.asarray(rights, dtype=np.int64),
        "alphas": np.asarray(alphas, dtype=np.float64),
        "importances": importances,
        "n_features": d,
    }


def adaboost_scores_batch(params, X, n_classes) -> np.ndarray:
    """Alpha-weighted vote share per class (normalized to sum 1)."""
    X = np.atleast_2d(X)
    votes = np.zeros((X.shape[0], n_classes))
    alphas = params["alphas"]
    if len(alphas) == 0:
        return np.full((X.shape[0], n_classes), 1.0 / n_classes)
    for j, thr, lc, rc, alpha in zip(
        params["features"],
        params["thresholds"],
        params["left_classes"],
        params["right_classes"],
        alphas,
    ):
        pred = np.where(X[:, j] <= thr, lc, rc)
        votes[np.arange(X.shape[0]), pred] += alpha
    return votes / alphas.sum()
