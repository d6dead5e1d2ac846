"""Shared predictor plumbing: hyperparameters, rankings, input checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..errors import TrainingError

KINDS = (
    "adaboost",
    "knn",
    "logistic_regression",
    "naive_bayes",
    "nearest_centroid",
    "neural_network",
    "random_forest",
)


@dataclass(frozen=True)
class HyperParams:
    """Hyperparameters for every predictor kind, with conventional defaults."""

    knn_k: int = 5
    forest_trees: int = 100
    forest_min_leaf: int = 1
    forest_max_features: str | int = "sqrt"
    forest_bootstrap: bool = True
    adaboost_stumps: int = 50
    nb_var_floor_rel: float = 1e-9
    logistic_l2: float = 1e-4
    logistic_tol: float = 1e-6
    logistic_max_iters: int = 5000
    logistic_lr: float = 1.0
    nn_hidden: int = 100
    nn_lr: float = 1e-3
    nn_epochs: int = 200
    nn_batch: int = 32

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "HyperParams":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass(frozen=True)
class Predictor:
    """A fitted architecture-prediction model."""

    kind: str
    class_list: tuple[str, ...]  # distinct training labels, sorted
    params: dict = field(repr=False)
    hyper: HyperParams = field(default_factory=HyperParams)
    train_seed: int = 0

    @property
    def n_features(self) -> int:
        return int(self.params["n_features"])


@dataclass(frozen=True)
class ClassRanking:
    """Every candidate class once, most likely first."""

    entries: tuple[tuple[str, float], ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.entries)

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(score for _, score in self.entries)

    def top(self) -> str:
        return self.entries[0][0]

    def position(self, label: str) -> int:
        """0-based rank of a label."""
        for i, (lab, _) in enumerate(self.entries):
            if lab == label:
                return i
        raise KeyError(label)


def make_ranking(class_list, scores, secondary=None) -> ClassRanking:
    """Order classes by score descending.

    ``secondary`` (smaller is better) breaks score ties before the final
    class-order tiebreak; KNN uses it for distance sums.
    """
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise TrainingError("ranking scores must be finite")
    if secondary is None:
        secondary = np.zeros(len(scores))
    order = sorted(
        range(len(class_list)),
        key=lambda i: (-scores[i], secondary[i], i),
    )
    return ClassRanking(tuple((class_list[i], float(scores[i])) for i in order))


def encode_labels(y) -> tuple[tuple[str, ...], np.ndarray]:
    labels = [str(v) for v in y]
    class_list = tuple(sorted(set(labels)))
    index = {c: i for i, c in enumerate(class_list)}
    return class_list, np.array([index[v] for v in labels], dtype=np.int32)


def check_training_input(X, y) -> tuple[np.ndarray, tuple[str, ...], np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise TrainingError(f"X must be 2-D, got shape {X.shape}")
    if len(y) != X.shape[0]:
        raise TrainingError(f"{X.shape[0]} rows but {len(y)} labels")
    if not np.all(np.isfinite(X)):
        raise TrainingError("training matrix contains non-finite values")
    class_list, codes = encode_labels(y)
    if len(class_list) < 2:
        raise TrainingError(
            f"degenerate class structure: need >= 2 classes, got {len(class_list)}"
        )
    if X.shape[0] < len(class_list):
        raise TrainingError("fewer rows than classes")
    return X, class_list, codes


def check_row(x, n_features) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != n_features:
        raise TrainingError(
            f"dimension mismatch: model expects {n_features} features, got {x.shape[0]}"
        )
    if not np.all(np.isfinite(x)):
        raise TrainingError("input row contains non-finite values")
    return x


def tree_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent child stream; parallel and serial training agree."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))
