"""Gaussian naive Bayes with a relative variance floor."""

from __future__ import annotations

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


def fit_naive_bayes(X, y, n_classes, hyper, seed):
    n, d = X.shape
    means = np.zeros((n_classes, d))
    variances = np.zeros((n_classes, d))
    priors = np.zeros(n_classes)
    for c in range(n_classes):
        rows = X[y == c]
        priors[c] = rows.shape[0] / n
        means[c] = rows.mean(axis=0)
        variances[c] = rows.var(axis=0)
    floor = hyper.nb_var_floor_rel * float(variances.max())
    if floor <= 0.0:
        # all features constant within every class; fall back to an
        # absolute epsilon so densities stay defined
        floor = hyper.nb_var_floor_rel
    variances = np.maximum(variances, floor)
    return {
        "means": means,
        "variances": variances,
        "log_priors": np.log(priors),
        "n_features": d,
    }


def nb_scores_batch(params, X) -> np.ndarray:
    """Unnormalized log-posterior per class."""
    X = np.atleast_2d(X)
    means, variances = params["means"], params["variances"]
    out = np.empty((X.shape[0], means.shape[0]))
    for c in range(means.shape[0]):
        z = (X - means[c]) ** 2 / variances[c]
        loglik = -0.5 * (np.log(variances[c]) + _LOG_2PI + z).sum(axis=1)
        out[:, c] = params["log_priors"][c] + loglik
    return out
