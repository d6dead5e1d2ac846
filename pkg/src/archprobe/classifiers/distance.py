"""Distance-based predictors: k-nearest-neighbors and nearest centroid."""

from __future__ import annotations

import numpy as np


def _pairwise_distances(A, B) -> np.ndarray:
    """Euclidean distances, (len(A), len(B)).

    Computed from explicit differences (not the expanded quadratic form)
    so values match a per-pair reference evaluation bit for bit; chunked
    over rows of A to bound the broadcast buffer.
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, int(8_000_000 / max(1, B.shape[0] * B.shape[1])))
    for start in range(0, A.shape[0], step):
        block = A[start : start + step]
        d2 = ((block[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        out[start : start + step] = np.sqrt(d2)
    return out


def fit_knn(X, y, n_classes, hyper, seed):
    return {"X": X.copy(), "y": y.copy(), "n_features": X.shape[1]}


def knn_scores_batch(params, X, n_classes, k):
    """Vote fractions among the k nearest training rows.

    Secondary key (smaller wins on vote ties) is the summed distance of
    each class's voting neighbors; classes with no vote keep 0. Neighbor
    ties on distance resolve by training-row order (stable sort).
    """
    X = np.atleast_2d(X)
    Xt, yt = params["X"], params["y"]
    k = max(1, min(k, Xt.shape[0]))
    dist = _pairwise_distances(X, Xt)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    scores = np.zeros((X.shape[0], n_classes))
    secondary = np.zeros((X.shape[0], n_classes))
    for i in range(X.shape[0]):
        neigh = order[i]
        classes = yt[neigh]
        np.add.at(scores[i], classes, 1.0)
        np.add.at(secondary[i], classes, dist[i, neigh])
    return scores / k, secondary


def fit_centroid(X, y, n_classes, hyper, seed):
    d = X.shape[1]
    centroids = np.zeros((n_classes, d))
    for c in range(n_classes):
        centroids[c] = X[y == c].mean(axis=0)
    return {"centroids": centroids, "n_features": d}


def centroid_scores_batch(params, X) -> np.ndarray:
    """Negative Euclidean distance to each class centroid."""
    return -_pairwise_distances(np.atleast_2d(X), params["centroids"])
