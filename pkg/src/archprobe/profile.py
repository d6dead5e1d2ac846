"""Domain types for aggregate GPU profiles.

An aggregate profile summarizes one application run: per-kernel and per-API
timing statistics plus optional system signals (clocks, temperature, power).
There is no event ordering anywhere in these types; only distributional
statistics survive aggregation.

Units follow one fixed convention so downstream code never sees a mixed
representation: totals in milliseconds, per-call avg/min in microseconds,
per-call max in milliseconds. Parsers convert on ingest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvariantError

_KERNEL_FIELDS = ("name", "time_pct", "total_time_ms", "calls", "avg_us", "min_us", "max_ms")
_SYSTEM_FIELDS = ("device", "signal", "sample_count", "avg", "min", "max")


def canonicalize_kernel_name(raw: str) -> str:
    """Normalize a kernel or API-call name to a stable feature key.

    Strips a leading ``void `` and truncates at the first ``<`` or ``(`` so
    template and argument suffixes (which vary across CUDA versions) do not
    fragment the feature space. Idempotent by construction.
    """
    name = raw.strip()
    if name.startswith("void "):
        name = name[len("void "):]
    for sep in "<(":
        idx = name.find(sep)
        if idx >= 0:
            name = name[:idx]
    return name.strip()


@dataclass(frozen=True)
class KernelStat:
    """Aggregate timing statistics of one GPU kernel."""

    name: str
    time_pct: float
    total_time_ms: float
    calls: int
    avg_us: float
    min_us: float
    max_ms: float

    def __post_init__(self):
        if self.calls < 1:
            raise InvariantError(f"{self.name}: calls must be >= 1, got {self.calls}")
        if self.total_time_ms < 0:
            raise InvariantError(f"{self.name}: negative total time")
        if not 0.0 <= self.time_pct <= 100.0:
            raise InvariantError(f"{self.name}: time_pct {self.time_pct} outside [0, 100]")
        if self.min_us > self.avg_us:
            raise InvariantError(f"{self.name}: min {self.min_us}us exceeds avg {self.avg_us}us")
        if self.avg_us > self.max_ms * 1000.0:
            raise InvariantError(f"{self.name}: avg {self.avg_us}us exceeds max {self.max_ms}ms")


# API calls carry the same statistics as kernels; a distinct type keeps the
# two populations from mixing in feature space.
@dataclass(frozen=True)
class ApiCallStat(KernelStat):
    pass


@dataclass(frozen=True)
class SystemSignalStat:
    """Sampled system signal (clock, temperature, power) for one device."""

    device: str
    signal: str
    sample_count: int
    avg: float
    min: float
    max: float

    def __post_init__(self):
        if self.sample_count < 1:
            raise InvariantError(f"{self.signal}: sample_count must be >= 1")
        if not (self.min <= self.avg <= self.max):
            raise InvariantError(
                f"{self.signal}: expected min <= avg <= max, got "
                f"{self.min} / {self.avg} / {self.max}"
            )


@dataclass(frozen=True)
class SourceMeta:
    device: str | None = None
    profiler_version: str | None = None
    driver_version: str | None = None


@dataclass(frozen=True)
class AggregateProfile:
    """One application's aggregate side-channel record."""

    kernels: tuple[KernelStat, ...]
    api_calls: tuple[ApiCallStat, ...]
    system: tuple[SystemSignalStat, ...] = ()
    source_meta: SourceMeta | None = None

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        object.__setattr__(self, "api_calls", tuple(self.api_calls))
        object.__setattr__(self, "system", tuple(self.system))
        for stats, what in ((self.kernels, "kernel"), (self.api_calls, "API call")):
            names = [s.name for s in stats]
            if len(names) != len(set(names)):
                dupes = sorted({n for n in names if names.count(n) > 1})
                raise InvariantError(f"duplicate {what} names after canonicalization: {dupes}")

    def kernel(self, name: str) -> KernelStat:
        for k in self.kernels:
            if k.name == name:
                return k
        raise KeyError(name)

    def api_call(self, name: str) -> ApiCallStat:
        for a in self.api_calls:
            if a.name == name:
                return a
        raise KeyError(name)

    def system_signal(self, signal: str) -> SystemSignalStat:
        for s in self.system:
            if s.signal == signal:
                return s
        raise KeyError(signal)


def profile_to_dict(profile: AggregateProfile) -> dict:
    doc = {
        "kernels": [{f: getattr(k, f) for f in _KERNEL_FIELDS} for k in profile.kernels],
        "api_calls": [{f: getattr(a, f) for f in _KERNEL_FIELDS} for a in profile.api_calls],
        "system": [{f: getattr(s, f) for f in _SYSTEM_FIELDS} for s in profile.system],
    }
    if profile.source_meta is not None:
        doc["source_meta"] = {
            "device": profile.source_meta.device,
            "profiler_version": profile.source_meta.profiler_version,
            "driver_version": profile.source_meta.driver_version,
        }
    return doc


def profile_from_dict(doc: dict) -> AggregateProfile:
    meta = None
    if doc.get("source_meta") is not None:
        m = doc["source_meta"]
        meta = SourceMeta(
            device=m.get("device"),
            profiler_version=m.get("profiler_version"),
            driver_version=m.get("driver_version"),
        )
    return AggregateProfile(
        kernels=tuple(KernelStat(**k) for k in doc.get("kernels", ())),
        api_calls=tuple(ApiCallStat(**a) for a in doc.get("api_calls", ())),
        system=tuple(SystemSignalStat(**s) for s in doc.get("system", ())),
        source_meta=meta,
    )


def profile_to_json(profile: AggregateProfile) -> str:
    """Canonical JSON rendering: sorted keys, exact float round trip."""
    return json.dumps(profile_to_dict(profile), sort_keys=True, indent=2) + "\n"


def profile_from_json(text: str) -> AggregateProfile:
    return profile_from_dict(json.loads(text))
