"""Offline preprocessing, online prediction, and evaluation.

``offline_preprocess`` turns a labeled training corpus into a persisted
AttackModel: feature space, scaler, optional elimination ranking, and a
trained predictor. ``predict_architecture`` replays the stored transforms
on a victim profile; no victim statistic ever feeds back into the fitted
parts. ``evaluate`` computes top-1/top-k/family metrics and the confusion
matrix against a held-out corpus.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .classifiers import (
    HyperParams,
    Predictor,
    make_ranking,
    predictor_from_dict,
    predictor_to_dict,
    score_matrix,
    train,
)
from .errors import ConfigError, EvaluationError
from .families import family_of
from .features import (
    GROUPS,
    FeatureId,
    FeatureSpace,
    Scaler,
    build_feature_space,
    build_matrix,
    fit_scaler,
    select_group,
    vectorize,
)
from .profile import AggregateProfile, profile_to_json
from .selection import FeatureRanking, rfe_rank, take_top

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def digest_of(doc) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


@dataclass(frozen=True)
class PipelineConfig:
    """Everything offline preprocessing needs, fully serializable."""

    groups: tuple[str, ...] = GROUPS
    exclude_memory: bool = False
    top_m: int | None = None
    predictor: str = "random_forest"
    rfe_estimator: str = "random_forest"
    rfe_step: float = 1
    hyper: HyperParams = field(default_factory=HyperParams)
    rfe_hyper: HyperParams | None = None
    seed: int = 0
    top_k: int = 5
    workers: int = 1

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        unknown = set(self.groups) - set(GROUPS)
        if unknown:
            raise ConfigError(f"unknown feature groups: {sorted(unknown)}")

    def to_dict(self) -> dict:
        doc = {
            "groups": sorted(self.groups),
            "exclude_memory": self.exclude_memory,
            "top_m": self.top_m,
            "predictor": self.predictor,
            "rfe_estimator": self.rfe_estimator,
            "rfe_step": self.rfe_step,
            "hyper": self.hyper.to_dict(),
            "rfe_hyper": self.rfe_hyper.to_dict() if self.rfe_hyper else None,
            "seed": self.seed,
            "top_k": self.top_k,
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        doc = dict(doc)
        doc["groups"] = tuple(doc.get("groups", GROUPS))
        if doc.get("hyper"):
            doc["hyper"] = HyperParams.from_dict(doc["hyper"])
        if doc.get("rfe_hyper"):
            doc["rfe_hyper"] = HyperParams.from_dict(doc["rfe_hyper"])
        doc.pop("workers", None)
        return cls(**doc)

    def digest(self) -> str:
        # workers is runtime parallelism, not model semantics
        return digest_of(self.to_dict())


@dataclass(frozen=True)
class AttackModel:
    """Persisted bundle: feature space, scaler, selection, predictor.

    ``known_sources`` records every source observed during training,
    including ones projected out of the feature space, so online warnings
    only flag genuinely unseen kernels.
    """

    space: FeatureSpace
    scaler: Scaler
    selected: tuple[FeatureId, ...]
    predictor: Predictor
    candidate_set: tuple[str, ...]
    provenance: dict
    known_sources: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        missing = [f for f in self.selected if f not in self.space]
        if missing:
            raise ConfigError(f"selected features outside the space: {missing[:3]}")
        if tuple(self.predictor.class_list) != tuple(self.candidate_set):
            raise ConfigError("predictor class list differs from candidate set")

    @property
    def selected_columns(self) -> list[int]:
        return [self.space.index_of(f) for f in self.selected]


def corpus_digest(corpus) -> str:
    h = hashlib.sha256()
    for profile, label in corpus:
        h.update(profile_to_json(profile).encode())
        h.update(str(label).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class Frontend:
    """Fitted featurization stage, reusable across predictor kinds."""

    space: FeatureSpace
    scaler: Scaler
    scaled: np.ndarray
    labels: tuple[str, ...]
    corpus_digest: str
    known_sources: tuple[tuple[str, str], ...]


def fit_frontend(corpus, config: PipelineConfig) -> Frontend:
    corpus = list(corpus)
    full = build_feature_space(corpus)
    space = select_group(full, config.groups, config.exclude_memory)
    matrix = build_matrix(corpus, space)
    scaler = fit_scaler(matrix)
    known = sorted(
        {(f.group, f.source_name) for f in full.features if f.group != "indicator"}
    )
    return Frontend(
        space=space,
        scaler=scaler,
        scaled=scaler.apply(matrix.rows),
        labels=matrix.labels,
        corpus_digest=corpus_digest(corpus),
        known_sources=tuple(known),
    )


def fit_ranking(frontend: Frontend, config: PipelineConfig) -> FeatureRanking:
    return rfe_rank(
        frontend.scaled,
        list(frontend.labels),
        frontend.space.features,
        config.rfe_estimator,
        hyper=config.rfe_hyper or config.hyper,
        step=config.rfe_step,
        seed=config.seed,
        workers=config.workers,
    )


def offline_preprocess(
    corpus,
    config: PipelineConfig,
    created: str | None = None,
    ranking: FeatureRanking | None = None,
    frontend: Frontend | None = None,
) -> AttackModel:
    """Fit the full offline stage on a labeled corpus.

    Deterministic given (corpus, config); ``created`` is stored verbatim in
    provenance (None by default so artifacts are byte-reproducible).
    Precomputed ``ranking``/``frontend`` skip refits when several
    predictors share one selection.
    """
    if frontend is None:
        frontend = fit_frontend(corpus, config)

    if config.top_m is not None:
        if ranking is None:
            ranking = fit_ranking(frontend, config)
        selected = take_top(ranking, config.top_m)
    else:
        selected = frontend.space.features

    cols = [frontend.space.index_of(f) for f in selected]
    predictor = train(
        config.predictor,
        frontend.scaled[:, cols],
        list(frontend.labels),
        hyper=config.hyper,
        seed=config.seed,
        workers=config.workers,
    )
    provenance = {
        "seed": config.seed,
        "corpus_digest": frontend.corpus_digest,
        "config_digest": config.digest(),
        "created": created,
    }
    return AttackModel(
        space=frontend.space,
        scaler=frontend.scaler,
        selected=tuple(selected),
        predictor=predictor,
        candidate_set=tuple(predictor.class_list),
        provenance=provenance,
        known_sources=frontend.known_sources,
    )


def _victim_rows(model: AttackModel, profiles) -> np.ndarray:
    rows = np.stack([vectorize(p, model.space) for p in profiles])
    scaled = model.scaler.apply(rows)
    return scaled[:, model.selected_columns]


def predict_architecture(model: AttackModel, victim: AggregateProfile):
    """Rank the candidate set for one victim profile."""
    known = set(model.known_sources) or {
        (f.group, f.source_name) for f in model.space.features if f.group != "indicator"
    }
    unseen = []
    for k in victim.kernels:
        if ("gpu_kernel", k.name) not in known:
            unseen.append(k.name)
    if unseen:
        log.warning(
            "victim profile has %d kernels outside the trained feature space "
            "(e.g. %s); they are ignored",
            len(unseen),
            unseen[0],
        )
    X = _victim_rows(model, [victim])
    scores, secondary = score_matrix(model.predictor, X)
    return make_ranking(
        model.predictor.class_list,
        scores[0],
        secondary[0] if secondary is not None else None,
    )


@dataclass(frozen=True)
class EvalReport:
    top1: float
    top5: float
    family_top1: float
    per_class_top1: dict
    confusion_labels: tuple[str, ...]
    confusion: np.ndarray  # true x predicted counts
    n_test: int
    k: int

    def to_dict(self) -> dict:
        return {
            "top1": self.top1,
            "top5": self.top5,
            "family_top1": self.family_top1,
            "per_class_top1": dict(sorted(self.per_class_top1.items())),
            "confusion": {
                "labels": list(self.confusion_labels),
                "counts": self.confusion.astype(int).tolist(),
            },
            "n_test": self.n_test,
            "k": self.k,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "n_test", "top1"])
        counts = self.confusion.sum(axis=1)
        for i, label in enumerate(self.confusion_labels):
            if counts[i] > 0:
                writer.writerow([label, int(counts[i]), repr(self.per_class_top1[label])])
        writer.writerow(["__overall__", self.n_test, repr(self.top1)])
        writer.writerow(["__top5__", self.n_test, repr(self.top5)])
        writer.writerow(["__family_top1__", self.n_test, repr(self.family_top1)])
        return buf.getvalue()


def ranking_metrics(rankings, labels, k: int = 5, family_map=None) -> EvalReport:
    """Metrics over precomputed class rankings.

    top1 counts the true label ranked first, topk counts it anywhere in
    the first k, and family_top1 counts predictions from the true label's
    architecture family.
    """
    rankings = list(rankings)
    labels = list(labels)
    if not rankings or len(rankings) != len(labels):
        raise EvaluationError(
            f"{len(rankings)} rankings but {len(labels)} labels"
        )
    classes = tuple(sorted(rankings[0].labels))
    class_index = {c: i for i, c in enumerate(classes)}
    for label in labels:
        if label not in class_index:
            raise EvaluationError(f"test label {label!r} is outside the candidate set")

    n = len(rankings)
    k_eff = min(k, len(classes))
    hits1 = hitsk = famhits = 0
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    per_class_hits: dict[str, list[int]] = {}
    for ranking, label in zip(rankings, labels):
        topk = ranking.labels[:k_eff]
        predicted = topk[0]
        confusion[class_index[label], class_index[predicted]] += 1
        hit1 = predicted == label
        hits1 += hit1
        hitsk += label in topk
        famhits += family_of(predicted, family_map) == family_of(label, family_map)
        per_class_hits.setdefault(label, []).append(int(hit1))

    per_class_top1 = {
        label: float(np.mean(hits)) for label, hits in per_class_hits.items()
    }
    return EvalReport(
        top1=hits1 / n,
        top5=hitsk / n,
        family_top1=famhits / n,
        per_class_top1=per_class_top1,
        confusion_labels=classes,
        confusion=confusion,
        n_test=n,
        k=k_eff,
    )


def evaluate(model: AttackModel, test_corpus, k: int = 5, family_map=None) -> EvalReport:
    """Top-1 / top-k / family accuracy plus the confusion matrix."""
    test_corpus = list(test_corpus)
    if not test_corpus:
        raise EvaluationError("empty test corpus")
    X = _victim_rows(model, [p for p, _ in test_corpus])
    scores, secondary = score_matrix(model.predictor, X)
    rankings = [
        make_ranking(
            model.predictor.class_list,
            scores[i],
            secondary[i] if secondary is not None else None,
        )
        for i in range(len(test_corpus))
    ]
    return ranking_metrics(
        rankings, [label for _, label in test_corpus], k=k, family_map=family_map
    )


def split_corpus(corpus, test_fraction: float = 0.25, seed: int = 0):
    """Stratified train/test split with a seeded per-class shuffle."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must be in (0, 1)")
    by_label: dict[str, list[int]] = {}
    for i, (_, label) in enumerate(corpus):
        by_label.setdefault(label, []).append(i)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 3])))
    train_idx, test_idx = [], []
    for label in sorted(by_label):
        idx = np.array(by_label[label])
        rng.shuffle(idx)
        n_test = int(round(test_fraction * len(idx)))
        n_test = min(max(n_test, 0), len(idx) - 1)
        test_idx.extend(idx[:n_test].tolist())
        train_idx.extend(idx[n_test:].tolist())
    return (
        [corpus[i] for i in sorted(train_idx)],
        [corpus[i] for i in sorted(test_idx)],
    )


def ablation_run(corpus_train, corpus_test, configs, kinds) -> list[dict]:
    """One EvalReport per (config, predictor kind).

    The featurization frontend and the elimination ranking are fitted once
    per config and shared across predictor kinds.
    """
    configs = list(configs)
    kinds = list(kinds)
    if not configs or not kinds:
        raise ConfigError("ablation grids must be nonempty")
    frontends: dict = {}
    rankings: dict = {}
    results = []
    for config in configs:
        fkey = (tuple(sorted(config.groups)), config.exclude_memory)
        if fkey not in frontends:
            frontends[fkey] = fit_frontend(corpus_train, config)
        frontend = frontends[fkey]
        ranking = None
        if config.top_m is not None:
            rkey = fkey + (
                config.rfe_estimator,
                config.rfe_step,
                config.seed,
                digest_of((config.rfe_hyper or config.hyper).to_dict()),
            )
            if rkey not in rankings:
                rankings[rkey] = fit_ranking(frontend, config)
            ranking = rankings[rkey]
        for kind in kinds:
            cfg = replace(config, predictor=kind)
            model = offline_preprocess(
                corpus_train, cfg, ranking=ranking, frontend=frontend
            )
            report = evaluate(model, corpus_test, k=cfg.top_k)
            results.append({"config": cfg, "kind": kind, "report": report})
    return results


# ---------------------------------------------------------------------------
# persistence

def _space_to_dict(space: FeatureSpace) -> dict:
    return {
        "features": [f.key for f in space.features],
        "column_means": space.column_means.tolist(),
        "incomplete": [list(src) for src in space.incomplete],
        "kernel_stats": list(space.kernel_stats),
        "system_stats": list(space.system_stats),
    }


def _space_from_dict(doc: dict) -> FeatureSpace:
    return FeatureSpace(
        features=tuple(FeatureId.from_key(k) for k in doc["features"]),
        column_means=np.asarray(doc["column_means"], dtype=float),
        incomplete=tuple((g, s) for g, s in doc["incomplete"]),
        kernel_stats=tuple(doc["kernel_stats"]),
        system_stats=tuple(doc["system_stats"]),
    )


def model_to_dict(model: AttackModel) -> dict:
    space_doc = _space_to_dict(model.space)
    return {
        "version": MODEL_FORMAT_VERSION,
        "schema_digest": digest_of(space_doc["features"]),
        "feature_space": space_doc,
        "scaler": {
            "mean": model.scaler.mean.tolist(),
            "scale": model.scaler.scale.tolist(),
            "bypass": model.scaler.bypass.astype(bool).tolist(),
        },
        "selected": [f.key for f in model.selected],
        "predictor": predictor_to_dict(model.predictor),
        "candidate_set": list(model.candidate_set),
        "provenance": model.provenance,
        "known_sources": [list(src) for src in model.known_sources],
    }


def model_from_dict(doc: dict) -> AttackModel:
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ConfigError(
            f"unsupported model format version {doc.get('version')!r}"
        )
    scaler = Scaler(
        mean=np.asarray(doc["scaler"]["mean"], dtype=float),
        scale=np.asarray(doc["scaler"]["scale"], dtype=float),
        bypass=np.asarray(doc["scaler"]["bypass"], dtype=bool),
    )
    return AttackModel(
        space=_space_from_dict(doc["feature_space"]),
        scaler=scaler,
        selected=tuple(FeatureId.from_key(k) for k in doc["selected"]),
        predictor=predictor_from_dict(doc["predictor"]),
        candidate_set=tuple(doc["candidate_set"]),
        provenance=dict(doc["provenance"]),
        known_sources=tuple((g, s) for g, s in doc.get("known_sources", ())),
    )


def save_model(model: AttackModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(model_to_dict(model)))


def load_model(path) -> AttackModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# corpus manifests: label-keyed lists of log paths, relative to the manifest

def save_manifest(entries, path, extra: dict | None = None) -> None:
    """entries: iterable of (relative log path, label)."""
    doc = {
        "version": 1,
        "profiles": [{"path": str(p), "label": str(label)} for p, label in entries],
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc))


def load_manifest(path):
    """Parse every profile named by a manifest into a labeled corpus."""
    from pathlib import Path

    from .nvprof import load_corpus

    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if "profiles" not in doc:
        raise ConfigError(f"manifest {path} has no 'profiles' list")
    paths = [path.parent / entry["path"] for entry in doc["profiles"]]
    labels = [entry["label"] for entry in doc["profiles"]]
    return load_corpus(paths, labels)
