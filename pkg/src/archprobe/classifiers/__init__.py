"""From-scratch multiclass predictors behind one train/rank contract.

Seven predictor kinds share the interface: ``train`` fits once and returns
an immutable Predictor; ``rank_classes`` scores every candidate class for
one input row, descending, with deterministic tie handling; ``predict``
takes the top of the ranking. Identical (X, y, hyper, seed) produce
bit-identical predictors regardless of worker count.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from . import bayes, boost, distance, forest, linear
from ._common import (
    KINDS,
    ClassRanking,
    HyperParams,
    Predictor,
    check_row,
    check_training_input,
    make_ranking,
)

__all__ = [
    "KINDS",
    "ClassRanking",
    "HyperParams",
    "Predictor",
    "train",
    "rank_classes",
    "predict",
    "score_matrix",
    "feature_importances",
    "predictor_to_dict",
    "predictor_from_dict",
]


def train(kind, X, y, hyper=None, seed=0, workers=1) -> Predictor:
    if kind not in KINDS:
        raise TrainingError(f"unknown predictor kind {kind!r}")
    if seed < 0:
        raise TrainingError("seed must be a non-negative integer")
    hyper = hyper or HyperParams()
    X, class_list, codes = check_training_input(X, y)
    n_classes = len(class_list)

    if kind == "logistic_regression":
        params = linear.fit_logistic(X, codes, n_classes, hyper, seed)
    elif kind == "neural_network":
        params = linear.fit_network(X, codes, n_classes, hyper, seed)
    elif kind == "knn":
        params = distance.fit_knn(X, codes, n_classes, hyper, seed)
    elif kind == "nearest_centroid":
        params = distance.fit_centroid(X, codes, n_classes, hyper, seed)
    elif kind == "naive_bayes":
        params = bayes.fit_naive_bayes(X, codes, n_classes, hyper, seed)
    elif kind == "random_forest":
        params = forest.fit_forest(X, codes, n_classes, hyper, seed, workers=workers)
    else:
        params = boost.fit_adaboost(X, codes, n_classes, hyper, seed)

    return Predictor(kind=kind, class_list=class_list, params=params,
                     hyper=hyper, train_seed=seed)


def score_matrix(p: Predictor, X) -> tuple[np.ndarray, np.ndarray | None]:
    """Per-kind class scores for a batch of rows; optional secondary key
    (smaller wins on ties) as used by KNN's distance-sum rule."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != p.n_features:
        raise TrainingError(
            f"dimension mismatch: model expects {p.n_features} features, got {X.shape[1]}"
        )
    if not np.all(np.isfinite(X)):
        raise TrainingError("input contains non-finite values")
    K = len(p.class_list)
    if p.kind == "logistic_regression":
        return linear.logistic_scores_batch(p.params, X), None
    if p.kind == "neural_network":
        return linear.nn_scores_batch(p.params, X), None
    if p.kind == "knn":
        return distance.knn_scores_batch(p.params, X, K, p.hyper.knn_k)
    if p.kind == "nearest_centroid":
        return distance.centroid_scores_batch(p.params, X), None
    if p.kind == "naive_bayes":
        return bayes.nb_scores_batch(p.params, X), None
    if p.kind == "random_forest":
        return forest.forest_scores_batch(p.params, X, K), None
    return boost.adaboost_scores_batch(p.params, X, K), None


def rank_classes(p: Predictor, x) -> ClassRanking:
    x = check_row(x, p.n_features)
    scores, secondary = score_matrix(p, x[None, :])
    return make_ranking(
        p.class_list, scores[0], secondary[0] if secondary is not None else None
    )


def predict(p: Predictor, x) -> str:
    return rank_classes(p, x).top()


def feature_importances(p: Predictor) -> np.ndarray:
    """Per-feature importance for kinds that support elimination ranking."""
    if p.kind == "logistic_regression":
        return np.abs(p.params["W"]).sum(axis=0)
    if p.kind in ("random_forest", "adaboost"):
        return np.asarray(p.params["importances"], dtype=float)
    raise TrainingError(f"predictor kind {p.kind!r} has no feature importances")


def _array_doc(a):
    return np.asarray(a).tolist()


def predictor_to_dict(p: Predictor) -> dict:
    params = {}
    for key, value in p.params.items():
        if key == "trees":
            params["trees"] = [
                {name: tree[name].tolist() for name in
                 ("feature", "threshold", "left", "right", "leaf")}
                for tree in value
            ]
        elif isinstance(value, np.ndarray):
            params[key] = _array_doc(value)
        else:
            params[key] = value
    return {
        "kind": p.kind,
        "class_list": list(p.class_list),
        "train_seed": p.train_seed,
        "hyper": p.hyper.to_dict(),
        "params": params,
    }


_PARAM_DTYPES = {
    "y": np.int32,
    "features": np.int64,
    "left_classes": np.int64,
    "right_classes": np.int64,
}


def predictor_from_dict(doc: dict) -> Predictor:
    params = {}
    for key, value in doc["params"].items():
        if key == "trees":
            params["trees"] = [
                {
                    "feature": np.asarray(t["feature"], dtype=np.int64),
                    "threshold": np.asarray(t["threshold"], dtype=np.float64),
                    "left": np.asarray(t["left"], dtype=np.int64),
                    "right": np.asarray(t["right"], dtype=np.int64),
                    "leaf": np.asarray(t["leaf"], dtype=np.int64),
                }
                for t in value
            ]
        elif isinstance(value, list):
            params[key] = np.asarray(value, dtype=_PARAM_DTYPES.get(key, np.float64))
        else:
            params[key] = value
    return Predictor(
        kind=doc["kind"],
        class_list=tuple(doc["class_list"]),
        params=params,
        hyper=HyperParams.from_dict(doc.get("hyper", {})),
        train_seed=doc.get("train_seed", 0),
    )
