"""Recursive feature elimination.

Repeatedly fits an importance-bearing estimator, drops the least important
features, and refits, until nothing remains; the ranking is the reverse of
elimination order. Supported estimators are the ones with a meaningful
per-feature importance: logistic regression (summed absolute
coefficients), random forest (mean impurity decrease), and AdaBoost
(summed stump weights).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifiers import feature_importances, train
from .errors import SelectionError
from .features import FeatureId

RFE_ESTIMATORS = ("logistic_regression", "random_forest", "adaboost")


@dataclass(frozen=True)
class EliminationRound:
    removed: tuple[FeatureId, ...]  # least important first
    importances: tuple[float, ...]  # aligned with removed


@dataclass(frozen=True)
class FeatureRanking:
    features: tuple[FeatureId, ...]  # most important first
    rounds: tuple[EliminationRound, ...]

    def __len__(self):
        return len(self.features)


def _round_size(step, remaining: int) -> int:
    if isinstance(step, float) and 0.0 < step < 1.0:
        return min(remaining, max(1, math.ceil(step * remaining)))
    step = int(step)
    if step < 1:
        raise SelectionError(f"step must be >= 1 or a fraction in (0, 1), got {step}")
    return min(remaining, step)


def rfe_rank(X, y, features, estimator_kind, hyper=None, step=1, seed=0,
             workers=1) -> FeatureRanking:
    """Rank features by recursive elimination.

    ``features`` names the columns of X (used for output and for breaking
    importance ties: the earlier feature wins). ``step`` is the number of
    features dropped per round, or a fraction of the remaining set.
    """
    if estimator_kind not in RFE_ESTIMATORS:
        raise SelectionError(
            f"estimator {estimator_kind!r} does not expose feature importances; "
            f"use one of {RFE_ESTIMATORS}"
        )
    X = np.asarray(X, dtype=np.float64)
    features = tuple(features)
    if X.ndim != 2 or X.shape[1] != len(features):
        raise SelectionError(
            f"matrix has {X.shape[1] if X.ndim == 2 else '?'} columns "
            f"but {len(features)} feature ids"
        )

    active = list(range(len(features)))
    rounds: list[EliminationRound] = []
    eliminated: list[int] = []
    while active:
        fit = train(estimator_kind, X[:, active], y, hyper=hyper, seed=seed,
                    workers=workers)
        imps = feature_importances(fit)
        n_drop = _round_size(step, len(active))
        # least important first; ties eliminate the later feature id first
        by_importance = sorted(
            range(len(active)), key=lambda i: (imps[i], -active[i])
        )
        drop_local = by_importance[:n_drop]
        rounds.append(
            EliminationRound(
                removed=tuple(features[active[i]] for i in drop_local),
                importances=tuple(float(imps[i]) for i in drop_local),
            )
        )
        eliminated.extend(active[i] for i in drop_local)
        dropped = set(drop_local)
        active = [a for i, a in enumerate(active) if i not in dropped]

    ranking = tuple(features[i] for i in reversed(eliminated))
    return FeatureRanking(features=ranking, rounds=tuple(rounds))


def take_top(ranking: FeatureRanking, m: int) -> tuple[FeatureId, ...]:
    """Top-m features, ranking order preserved."""
    if not 1 <= m <= len(ranking.features):
        raise SelectionError(
            f"m must be in [1, {len(ranking.features)}], got {m}"
        )
    return ranking.features[:m]


def ranking_to_dict(ranking: FeatureRanking) -> dict:
    return {
        "ranking": [f.key for f in ranking.features],
        "rounds": [
            {
                "removed": [f.key for f in r.removed],
                "importances": list(r.importances),
            }
            for r in ranking.rounds
        ],
    }


def ranking_from_dict(doc: dict) -> FeatureRanking:
    return FeatureRanking(
        features=tuple(FeatureId.from_key(k) for k in doc["ranking"]),
        rounds=tuple(
            EliminationRound(
                removed=tuple(FeatureId.from_key(k) for k in r["removed"]),
                importances=tuple(float(v) for v in r["importances"]),
            )
            for r in doc.get("rounds", ())
        ),
    )
