"""Feature-space construction over a profile corpus.

A feature is one statistic of one profile source, identified by the triple
(group, source name, stat). Different architectures execute different
kernel sets, so the union feature space over a corpus has holes: a source
absent from at least one training profile is "incomplete". Each incomplete
source gets a binary indicator feature recording presence, and its numeric
statistics are mean-imputed from the profiles where it was observed.

Numeric features partition into the three source groups (system signals,
GPU kernels, API calls); indicator features form a fourth group whose
source names are prefixed with the source group ("gpu_kernel:foo") so the
triple stays globally unique.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import FeatureError
from .profile import AggregateProfile

log = logging.getLogger(__name__)

GROUPS = ("api_call", "gpu_kernel", "indicator", "system")
NUMERIC_GROUPS = ("api_call", "gpu_kernel", "system")

KERNEL_STATS = ("time_pct", "total_time", "calls", "avg", "min", "max")
SYSTEM_STATS = ("sample_count", "avg_val", "min_val", "max_val")

_KERNEL_STAT_ATTR = {
    "time_pct": "time_pct",
    "total_time": "total_time_ms",
    "calls": "calls",
    "avg": "avg_us",
    "min": "min_us",
    "max": "max_ms",
}
_SYSTEM_STAT_ATTR = {
    "sample_count": "sample_count",
    "avg_val": "avg",
    "min_val": "min",
    "max_val": "max",
}


def default_memory_markers() -> tuple[str, ...]:
    with resources.files("archprobe.data").joinpath("memory_markers.json").open() as fh:
        return tuple(json.load(fh)["markers"])


@dataclass(frozen=True, order=True)
class FeatureId:
    group: str
    source_name: str
    stat: str

    def __post_init__(self):
        if self.group not in GROUPS:
            raise FeatureError(f"unknown feature group {self.group!r}")
        if (self.group == "indicator") != (self.stat == "present"):
            raise FeatureError(
                f"indicator group and 'present' stat must pair up: {self!r}"
            )

    @property
    def key(self) -> str:
        return f"{self.group}:{self.source_name}:{self.stat}"

    @classmethod
    def from_key(cls, key: str) -> "FeatureId":
        first = key.find(":")
        last = key.rfind(":")
        if first < 0 or last <= first:
            raise FeatureError(f"malformed feature key {key!r}")
        return cls(group=key[:first], source_name=key[first + 1 : last], stat=key[last + 1 :])


def indicator_for(group: str, source_name: str) -> FeatureId:
    return FeatureId("indicator", f"{group}:{source_name}", "present")


@dataclass(frozen=True)
class FeatureSpace:
    """Union feature schema over a training corpus, with imputation means."""

    features: tuple[FeatureId, ...]
    column_means: np.ndarray  # aligned with features
    incomplete: tuple[tuple[str, str], ...]  # (group, source_name), sorted
    kernel_stats: tuple[str, ...] = KERNEL_STATS
    system_stats: tuple[str, ...] = SYSTEM_STATS

    def __post_init__(self):
        object.__setattr__(self, "_index", {f: i for i, f in enumerate(self.features)})

    def __len__(self):
        return len(self.features)

    def index_of(self, feature: FeatureId) -> int:
        return self._index[feature]

    def __contains__(self, feature: FeatureId) -> bool:
        return feature in self._index

    def group_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(GROUPS, 0)
        for f in self.features:
            counts[f.group] += 1
        return counts


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    labels: tuple[str, ...]
    space: FeatureSpace

    def __post_init__(self):
        if self.rows.shape[0] != len(self.labels):
            raise FeatureError(
                f"{self.rows.shape[0]} rows but {len(self.labels)} labels"
            )
        if np.isnan(self.rows).any():
            raise FeatureError("feature matrix contains NaN after imputation")


def _profile_sources(profile: AggregateProfile):
    """Yield ((group, source_name), stat_name -> value) for one profile."""
    for k in profile.kernels:
        yield ("gpu_kernel", k.name), k
    for a in profile.api_calls:
        yield ("api_call", a.name), a
    for s in profile.system:
        yield ("system", s.signal), s


def _stat_value(group: str, obj, stat: str) -> float:
    attr = _KERNEL_STAT_ATTR[stat] if group in ("gpu_kernel", "api_call") else _SYSTEM_STAT_ATTR[stat]
    return float(getattr(obj, attr))


def _normalize_corpus(corpus):
    pairs = []
    for item in corpus:
        if isinstance(item, AggregateProfile):
            pairs.append((item, None))
        else:
            profile, label = item
            pairs.append((profile, label))
    return pairs


def build_feature_space(
    corpus,
    kernel_stats: tuple[str, ...] = KERNEL_STATS,
    system_stats: tuple[str, ...] = SYSTEM_STATS,
) -> FeatureSpace:
    """Union feature space of a labeled corpus.

    Means are computed over present values only; sources missing from at
    least one profile populate ``incomplete`` and get indicator features.
    """
    pairs = _normalize_corpus(corpus)
    if not pairs:
        raise FeatureError("cannot build a feature space from an empty corpus")

    n = len(pairs)
    presence: dict[tuple[str, str], int] = {}
    values: dict[FeatureId, list[float]] = {}
    stats_for = {"gpu_kernel": kernel_stats, "api_call": kernel_stats, "system": system_stats}

    for profile, _ in pairs:
        for (group, source), obj in _profile_sources(profile):
            presence[(group, source)] = presence.get((group, source), 0) + 1
            for stat in stats_for[group]:
                fid = FeatureId(group, source, stat)
                values.setdefault(fid, []).append(_stat_value(group, obj, stat))

    incomplete = tuple(sorted(src for src, count in presence.items() if count < n))
    features = sorted(values.keys())
    features += [indicator_for(group, source) for group, source in incomplete]
    features = tuple(sorted(features))

    means = np.zeros(len(features))
    for i, fid in enumerate(features):
        if fid.group == "indicator":
            group, source = fid.source_name.split(":", 1)
            means[i] = presence[(group, source)] / n
        else:
            means[i] = float(np.mean(np.asarray(values[fid])))

    return FeatureSpace(
        features=features,
        column_means=means,
        incomplete=incomplete,
        kernel_stats=tuple(kernel_stats),
        system_stats=tuple(system_stats),
    )


def vectorize(profile: AggregateProfile, space: FeatureSpace) -> np.ndarray:
    """Numeric row for one profile against a fitted space.

    Present sources contribute their statistics verbatim; absent numeric
    features take the stored column mean; indicators are 1/0 by presence.
    Sources unknown to the space are ignored (logged at debug level).
    """
    by_source = {}
    for (group, source), obj in _profile_sources(profile):
        if (group, source) in by_source:
            continue
        by_source[(group, source)] = obj

    known_sources = {(f.group, f.source_name) for f in space.features if f.group != "indicator"}
    for src in by_source:
        if src not in known_sources:
            log.debug("ignoring source outside the feature space: %s", src)

    row = np.empty(len(space.features))
    for i, fid in enumerate(space.features):
        if fid.group == "indicator":
            group, source = fid.source_name.split(":", 1)
            row[i] = 1.0 if (group, source) in by_source else 0.0
        else:
            obj = by_source.get((fid.group, fid.source_name))
            if obj is None:
                row[i] = space.column_means[i]
            else:
                row[i] = _stat_value(fid.group, obj, fid.stat)
    return row


def build_matrix(corpus, space: FeatureSpace) -> FeatureMatrix:
    pairs = _normalize_corpus(corpus)
    rows = np.empty((len(pairs), len(space.features)))
    labels = []
    for r, (profile, label) in enumerate(pairs):
        rows[r] = vectorize(profile, space)
        labels.append(label)
    return FeatureMatrix(rows=rows, labels=tuple(labels), space=space)


@dataclass(frozen=True)
class Scaler:
    """Per-column z-score transform; indicator columns pass through."""

    mean: np.ndarray
    scale: np.ndarray
    bypass: np.ndarray  # bool mask of untouched columns

    def apply(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        out = (rows - self.mean) / self.scale
        out[:, self.bypass] = rows[:, self.bypass]
        return out


def fit_scaler(matrix: FeatureMatrix) -> Scaler:
    """Fit a z-score scaler on training rows.

    Constant columns get scale 1 so they map to exactly 0; indicator
    columns are bypassed and stay 0/1.
    """
    rows = matrix.rows
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    bypass = np.array([f.group == "indicator" for f in matrix.space.features])
    return Scaler(mean=mean, scale=scale, bypass=bypass)


def apply_scaler(scaler: Scaler, rows: np.ndarray) -> np.ndarray:
    return scaler.apply(rows)


def select_group(
    space: FeatureSpace,
    groups,
    exclude_memory: bool = False,
    memory_markers: tuple[str, ...] | None = None,
) -> FeatureSpace:
    """Project a space onto the given groups.

    With ``exclude_memory``, GPU-kernel features whose source name contains
    a memory marker (substring match, case-insensitive) are dropped.
    """
    groups = set(groups)
    unknown = groups - set(GROUPS)
    if unknown:
        raise FeatureError(f"unknown groups: {sorted(unknown)}")
    if exclude_memory and memory_markers is None:
        memory_markers = default_memory_markers()
    markers = tuple(m.lower() for m in (memory_markers or ()))

    def keep(fid: FeatureId) -> bool:
        if fid.group not in groups:
            return False
        if exclude_memory and fid.group == "gpu_kernel":
            name = fid.source_name.lower()
            if any(m in name for m in markers):
                return False
        return True

    kept = [i for i, f in enumerate(space.features) if keep(f)]
    if not kept:
        raise FeatureError(f"projection onto {sorted(groups)} is empty")
    features = tuple(space.features[i] for i in kept)
    feature_set = set(features)
    incomplete = tuple(
        src for src in space.incomplete if indicator_for(*src) in feature_set
    )
    return FeatureSpace(
        features=features,
        column_means=space.column_means[kept],
        incomplete=incomplete,
        kernel_stats=space.kernel_stats,
        system_stats=space.system_stats,
    )


def project_matrix(matrix: FeatureMatrix, subspace: FeatureSpace) -> FeatureMatrix:
    cols = [matrix.space.index_of(f) for f in subspace.features]
    return FeatureMatrix(rows=matrix.rows[:, cols], labels=matrix.labels, space=subspace)


LABEL_COLUMN = "__arch__"


def export_matrix_csv(matrix: FeatureMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([f.key for f in matrix.space.features] + [LABEL_COLUMN])
    for row, label in zip(matrix.rows, matrix.labels):
        writer.writerow([repr(v) for v in row.tolist()] + [label])
    return buf.getvalue()


def import_matrix_csv(text: str) -> FeatureMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[-1] != LABEL_COLUMN:
        raise FeatureError(f"matrix CSV must end with a {LABEL_COLUMN} column")
    features = tuple(FeatureId.from_key(k) for k in header[:-1])
    rows, labels = [], []
    for cells in reader:
        if not cells:
            continue
        rows.append([float(c) for c in cells[:-1]])
        labels.append(cells[-1])
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise FeatureError("matrix CSV has no data rows")
    indicator_sources = tuple(
        tuple(f.source_name.split(":", 1)) for f in features if f.group == "indicator"
    )
    space = FeatureSpace(
        features=features,
        column_means=data.mean(axis=0),
        incomplete=tuple(sorted(indicator_sources)),
    )
    return FeatureMatrix(rows=data, labels=tuple(labels), space=space)
