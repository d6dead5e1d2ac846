"""Seeded synthetic profile corpora with planted ground truth.

Desk-scale stand-in for profiling real models: three designated GPU-kernel
features carry class-separating values (margins far above the noise
floor), family membership shows up as memory-management kernels present
only within a family, and system signals are pure noise unless a spurious
per-class offset is requested for training draws. All other statistics are
base magnitudes in realistic ranges plus relative Gaussian noise.

Variants model deployment shifts: "pruned" drifts every non-informative
source, "cross_gpu" applies per-source gains/offsets to all of them.
Generation is a pure function of (layout, spec, seed); profile draws use
per-profile derived streams, so corpora are reproducible byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import SynthSpecError
from .families import ARCHITECTURES, FAMILY_MAP
from .features import FeatureId
from .profile import (
    AggregateProfile,
    ApiCallStat,
    KernelStat,
    SourceMeta,
    SystemSignalStat,
)

# The three planted features: total time of a vectorized compare kernel,
# per-call average of a batch-norm kernel, total time of a convolution.
INFORMATIVE = (
    ("vectorized_tensor_compare", "total_time"),
    ("cudnn::detail::bn_fw_inf_1C11_", "avg"),
    ("cudnn::detail::implicit_convolve", "total_time"),
)

# Each planted feature walks the classes in its own coprime order, so the
# three stay decorrelated while every one of them keeps a full ladder of
# class-separated values. Tree splits on a planted feature remain clean at
# every depth, which is what keeps their importance far above the weak
# background signal during elimination.
_INFORMATIVE_STEPS = (1, 7, 11)
_INFORMATIVE_OFFSETS = (0, 3, 5)


def _coprime_step(preferred: int, n: int) -> int:
    step = preferred
    while math.gcd(step, n) != 1:
        step += 1
    return step


_MEMORY_KERNELS = (
    "[CUDA memcpy HtoD]",
    "[CUDA memcpy DtoH]",
    "[CUDA memset]",
    "cask::memcpy_tile",
)

_API_CALLS = (
    "cudaMemcpyAsync",
    "cudaFree",
    "cudaMalloc",
    "cudaLaunchKernel",
    "cudaStreamSynchronize",
    "cudaEventRecord",
    "cudaDeviceSynchronize",
    "cuModuleGetFunction",
    "cudaHostAlloc",
    "cudaSetDevice",
    "cudaGetLastError",
    "cudaFuncGetAttributes",
)

_SIGNALS = (
    "SM Clock (MHz)",
    "Memory Clock (MHz)",
    "Temperature (C)",
    "Power (mW)",
    "Fan Speed (%)",
)

_DEVICE = "SynthGPU 9000"


def informative_feature_ids() -> tuple[FeatureId, ...]:
    return tuple(FeatureId("gpu_kernel", name, stat) for name, stat in INFORMATIVE)


@dataclass(frozen=True)
class PerturbationSpec:
    """Noise and shift magnitudes for corpus generation and variants.

    ``informative_sep`` is the planted per-class step of the three
    designated features. ``background_signal`` gives every other kernel
    and API statistic a small class-dependent offset, as real profiles
    leak architecture through many statistics at once; it stays well
    below the planted margin. System signals never carry class signal
    except through ``spurious_corr``, which offsets training draws only.
    """

    noise_rel: float = 0.02
    prune_shift: float = 0.25
    gpu_shift: float = 0.0
    gpu_offset_us: float = 0.0
    spurious_corr: float = 0.0
    informative_sep: float = 0.6
    background_signal: float = 0.08

    def __post_init__(self):
        if self.noise_rel < 0:
            raise SynthSpecError(f"noise_rel must be >= 0, got {self.noise_rel}")
        if not 0 <= self.prune_shift < 1:
            raise SynthSpecError(f"prune_shift must be in [0, 1), got {self.prune_shift}")
        if self.gpu_shift < 0:
            raise SynthSpecError("gpu_shift must be >= 0 (gains stay positive)")
        if self.gpu_offset_us < 0 or self.spurious_corr < 0:
            raise SynthSpecError("offsets must be >= 0")
        if self.informative_sep <= 0:
            raise SynthSpecError("informative_sep must be > 0")
        if self.background_signal < 0:
            raise SynthSpecError("background_signal must be >= 0")


@dataclass(frozen=True)
class CorpusLayout:
    """How many sources of each kind the corpus carries.

    Family-marker kernels are memory-management kernels present only in
    one family's classes; extra incomplete sources alternate presence by
    class parity. Defaults keep the non-memory GPU-kernel space free of
    presence patterns so planted-signal recovery is clean.
    """

    n_core_kernels: int = 37
    n_memory_kernels: int = 4
    family_markers: bool = True
    n_extra_incomplete_kernels: int = 0
    n_api_calls: int = 12
    n_incomplete_api_calls: int = 0
    n_signals: int = 4


@dataclass(frozen=True)
class ArchSignature:
    arch: str
    family: str
    kernels: tuple[str, ...]
    api_calls: tuple[str, ...]
    informative_values: tuple[float, ...]


@dataclass(frozen=True)
class _SourceBase:
    kind: str  # "kernel" | "api"
    name: str
    pct: float
    total_ms: float
    calls: float
    avg_us: float
    min_frac: float
    max_us: float


@dataclass(frozen=True)
class _SignalBase:
    name: str
    count: float
    avg: float
    min: float
    max: float


def _family_slug(family: str) -> str:
    return family.lower().replace("_", "")


def _kernel_names(layout: CorpusLayout, families: list[str]) -> list[str]:
    names = [name for name, _ in INFORMATIVE]
    names += [f"fused_grid_kernel_{i:02d}" for i in range(layout.n_core_kernels)]
    names += list(_MEMORY_KERNELS[: layout.n_memory_kernels])
    if layout.n_memory_kernels > len(_MEMORY_KERNELS):
        names += [
            f"[CUDA memcpy peer {i}]"
            for i in range(layout.n_memory_kernels - len(_MEMORY_KERNELS))
        ]
    if layout.family_markers:
        names += [f"workspace_memcpy_{_family_slug(f)}" for f in families]
    names += [f"strided_gather_kernel_{i:02d}" for i in range(layout.n_extra_incomplete_kernels)]
    return names


def _api_names(layout: CorpusLayout) -> list[str]:
    names = list(_API_CALLS[: layout.n_api_calls])
    if layout.n_api_calls > len(_API_CALLS):
        names += [f"cudaUserHook_{i:02d}" for i in range(layout.n_api_calls - len(_API_CALLS))]
    names += [f"cuStreamBatchOp_{i:02d}" for i in range(layout.n_incomplete_api_calls)]
    return names


class _Blueprint:
    """Base magnitudes and inventories shared by every profile of a corpus."""

    def __init__(self, n_classes, spec: PerturbationSpec, layout: CorpusLayout, seed: int):
        if not 1 <= n_classes <= len(ARCHITECTURES):
            raise SynthSpecError(
                f"n_classes must be in [1, {len(ARCHITECTURES)}], got {n_classes}"
            )
        self.n_classes = n_classes
        self.spec = spec
        self.layout = layout
        self.classes = list(ARCHITECTURES[:n_classes])
        self.families = sorted({FAMILY_MAP[a] for a in self.classes})

        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0])))

        self.kernels = self._draw_sources("kernel", _kernel_names(layout, self.families), rng, pct_sum=88.0)
        self.apis = self._draw_sources("api", _api_names(layout), rng, pct_sum=95.0)
        self.signals = self._draw_signals(rng)

        sep = spec.informative_sep
        self.informative_values = {}
        for i, (name, stat) in enumerate(INFORMATIVE):
            base = self._informative_base(name, stat)
            step = _coprime_step(_INFORMATIVE_STEPS[i], n_classes)
            offset = _INFORMATIVE_OFFSETS[i]
            values = [
                base * (1.0 + sep * ((step * c + offset) % n_classes))
                for c in range(n_classes)
            ]
            self.informative_values[(name, stat)] = values

        # weak per-class offsets for every non-planted kernel/API statistic
        self.weak = {}
        for src in self.kernels + self.apis:
            for stat in _STAT_ORDER:
                if (src.name, _STAT_TO_FEATURE.get(stat)) in self.informative_values:
                    self.weak[(src.name, stat)] = np.zeros(n_classes)
                else:
                    self.weak[(src.name, stat)] = rng.uniform(-1.0, 1.0, size=n_classes)

    def _informative_base(self, name, stat):
        src = next(s for s in self.kernels if s.name == name)
        return src.total_ms if stat == "total_time" else src.avg_us

    def _draw_sources(self, kind, names, rng, pct_sum):
        raw_pct = rng.uniform(0.5, 6.0, size=len(names))
        pct = raw_pct / raw_pct.sum() * pct_sum
        sources = []
        for i, name in enumerate(names):
            total_ms = float(np.exp(rng.uniform(np.log(0.01), np.log(15.0))))
            calls = float(rng.uniform(10, 600))
            avg_us = float(np.exp(rng.uniform(np.log(2.0), np.log(200.0))))
            min_frac = float(rng.uniform(0.05, 0.3))
            max_mult = float(rng.uniform(3.0, 20.0))
            if kind == "api":
                total_ms *= 50.0
                avg_us *= 20.0
            sources.append(
                _SourceBase(
                    kind=kind,
                    name=name,
                    pct=float(pct[i]),
                    total_ms=total_ms,
                    calls=calls,
                    avg_us=avg_us,
                    min_frac=min_frac,
                    max_us=max_mult * avg_us,
                )
            )
        # widen max slack where the informative stat is the per-call average
        out = []
        for src in sources:
            widened = src
            for (name, stat) in {k for k in INFORMATIVE if k[1] == "avg"}:
                if src.name == name:
                    widened = replace(
                        src,
                        max_us=src.max_us * (1.0 + self.spec.informative_sep * self.n_classes),
                    )
            out.append(widened)
        return out

    def _draw_signals(self, rng):
        signals = []
        for name in _SIGNALS[: self.layout.n_signals]:
            avg = float(np.exp(rng.uniform(np.log(40.0), np.log(70000.0))))
            signals.append(
                _SignalBase(
                    name=name,
                    count=float(rng.uniform(50, 140)),
                    avg=avg,
                    min=avg * float(rng.uniform(0.2, 0.6)),
                    max=avg * float(rng.uniform(1.2, 1.6)),
                )
            )
        return signals

    def inventory(self, class_idx: int):
        """Kernel and API names present in this class's profiles."""
        arch = self.classes[class_idx]
        family = FAMILY_MAP[arch]
        kernels = []
        for src in self.kernels:
            if src.name.startswith("workspace_memcpy_"):
                if src.name == f"workspace_memcpy_{_family_slug(family)}":
                    kernels.append(src)
            elif src.name.startswith("strided_gather_kernel_"):
                idx = int(src.name.rsplit("_", 1)[1])
                if (class_idx + idx) % 2 == 0:
                    kernels.append(src)
            else:
                kernels.append(src)
        apis = []
        for src in self.apis:
            if src.name.startswith("cuStreamBatchOp_"):
                idx = int(src.name.rsplit("_", 1)[1])
                if (class_idx + idx) % 2 == 0:
                    apis.append(src)
            else:
                apis.append(src)
        return kernels, apis

    def signature(self, class_idx: int) -> ArchSignature:
        kernels, apis = self.inventory(class_idx)
        return ArchSignature(
            arch=self.classes[class_idx],
            family=FAMILY_MAP[self.classes[class_idx]],
            kernels=tuple(s.name for s in kernels),
            api_calls=tuple(s.name for s in apis),
            informative_values=tuple(
                self.informative_values[key][class_idx] for key in INFORMATIVE
            ),
        )


# draw order within a source; "total"/"avg" may carry the planted value
_STAT_ORDER = ("pct", "total", "calls", "avg", "min", "max")
_STAT_TO_FEATURE = {"total": "total_time", "avg": "avg"}


def _draw_stat(base_mu, base_scale, sigma, rng):
    return base_mu + sigma * base_scale * float(rng.standard_normal())


def _profile_for(bp: _Blueprint, class_idx: int, rng, spurious: bool) -> AggregateProfile:
    sigma = bp.spec.noise_rel
    lam = bp.spec.background_signal
    kernels, apis = bp.inventory(class_idx)
    kernel_stats, api_stats = [], []
    for src in kernels + apis:
        bases = {
            "pct": src.pct,
            "total": src.total_ms,
            "calls": src.calls,
            "avg": src.avg_us,
            "min": src.min_frac * src.avg_us,
            "max": src.max_us,
        }
        drawn = {}
        for stat in _STAT_ORDER:
            base = bases[stat]
            planted = bp.informative_values.get((src.name, _STAT_TO_FEATURE.get(stat)))
            if planted is not None:
                mu = planted[class_idx]
            else:
                mu = base * (1.0 + lam * float(bp.weak[(src.name, stat)][class_idx]))
            drawn[stat] = mu + sigma * base * float(rng.standard_normal())

        pct = min(max(0.0, drawn["pct"]), 100.0)
        total = max(0.0, drawn["total"])
        calls = max(1, round(drawn["calls"]))
        avg = max(1e-6, drawn["avg"])
        mn = min(max(0.0, drawn["min"]), avg)
        mx = max(drawn["max"], avg * 1.01)
        stat_cls = KernelStat if src.kind == "kernel" else ApiCallStat
        stat = stat_cls(
            name=src.name,
            time_pct=pct,
            total_time_ms=total,
            calls=int(calls),
            avg_us=avg,
            min_us=mn,
            max_ms=mx / 1000.0,
        )
        (kernel_stats if src.kind == "kernel" else api_stats).append(stat)

    system_stats = []
    for sig in bp.signals:
        avg = _draw_stat(sig.avg, sig.avg, sigma, rng)
        mn = _draw_stat(sig.min, sig.min, sigma, rng)
        mx = _draw_stat(sig.max, sig.max, sigma, rng)
        mn = min(mn, avg)
        mx = max(mx, avg)
        if spurious and bp.spec.spurious_corr > 0:
            delta = bp.spec.spurious_corr * sig.avg * (class_idx + 1)
            avg, mn, mx = avg + delta, mn + delta, mx + delta
        count = max(1, round(_draw_stat(sig.count, sig.count, sigma, rng)))
        system_stats.append(
            SystemSignalStat(
                device=_DEVICE,
                signal=sig.name,
                sample_count=int(count),
                avg=avg,
                min=mn,
                max=mx,
            )
        )

    # matches what a parse of the emitted CSV reconstructs
    meta = SourceMeta(device=_DEVICE) if system_stats else None
    return AggregateProfile(
        kernels=tuple(kernel_stats),
        api_calls=tuple(api_stats),
        system=tuple(system_stats),
        source_meta=meta,
    )


def build_signatures(n_classes, spec=None, layout=None, seed=0):
    bp = _Blueprint(n_classes, spec or PerturbationSpec(), layout or CorpusLayout(), seed)
    sigs = [bp.signature(c) for c in range(n_classes)]
    triples = [s.informative_values for s in sigs]
    if len(set(triples)) != len(triples):
        raise SynthSpecError("informative value triples are not pairwise distinct")
    return sigs


def generate_corpus(
    n_classes,
    profiles_per_class,
    spec: PerturbationSpec | None = None,
    seed: int = 0,
    layout: CorpusLayout | None = None,
    role: str = "train",
    rep_offset: int = 0,
):
    """Labeled profiles: ``profiles_per_class`` draws for each class.

    ``role`` gates the spurious system-signal offsets: "train" applies
    them when ``spec.spurious_corr`` is set, "test" never does.
    ``rep_offset`` shifts the per-profile streams so train and test
    corpora drawn from the same seed share signatures but not noise.
    """
    if profiles_per_class < 1:
        raise SynthSpecError("profiles_per_class must be >= 1")
    if role not in ("train", "test"):
        raise SynthSpecError(f"role must be 'train' or 'test', got {role!r}")
    spec = spec or PerturbationSpec()
    bp = _Blueprint(n_classes, spec, layout or CorpusLayout(), seed)
    corpus = []
    for class_idx in range(n_classes):
        for rep in range(profiles_per_class):
            rng = np.random.Generator(
                np.random.PCG64(
                    np.random.SeedSequence([seed, 1, class_idx, rep_offset + rep])
                )
            )
            profile = _profile_for(bp, class_idx, rng, spurious=(role == "train"))
            corpus.append((profile, bp.classes[class_idx]))
    return corpus


def write_corpus(corpus, outdir) -> "Path":
    """Emit a generated corpus as CSV logs plus a manifest.

    The logs use the profiler CSV format, so reading them back exercises
    the real parse path and reproduces the profiles bit for bit.
    """
    from pathlib import Path

    from .nvprof import format_log
    from .pipeline import save_manifest

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    counters: dict[str, int] = {}
    for profile, label in corpus:
        i = counters.get(label, 0)
        counters[label] = i + 1
        name = f"{label}_{i:03d}.csv"
        (outdir / name).write_text(
            format_log(profile, pid=1000 + i, command=f"victim_{label}"),
            encoding="utf-8",
        )
        entries.append((name, label))
    manifest = outdir / "manifest.json"
    save_manifest(entries, manifest)
    return manifest


_INFORMATIVE_BY_SOURCE = {}
for _name, _stat in INFORMATIVE:
    _INFORMATIVE_BY_SOURCE.setdefault(_name, set()).add(_stat)


def _variant_stat(stat, gain, offset_us, protect: set[str]):
    """Scale one kernel/API stat record; informative stats keep their value."""
    fields = {
        "total_time_ms": stat.total_time_ms * gain
        if "total_time" not in protect
        else stat.total_time_ms,
        "avg_us": stat.avg_us * gain + offset_us if "avg" not in protect else stat.avg_us,
        "min_us": stat.min_us * gain + offset_us,
        "max_ms": stat.max_ms * gain + offset_us / 1000.0,
    }
    fields["min_us"] = min(fields["min_us"], fields["avg_us"])
    fields["max_ms"] = max(fields["max_ms"], fields["avg_us"] * 1.01 / 1000.0)
    return type(stat)(
        name=stat.name,
        time_pct=stat.time_pct,
        calls=stat.calls,
        **fields,
    )


def apply_variant(corpus, variant: str, spec: PerturbationSpec | None = None, seed: int = 0):
    """Deployment-shift transform of a generated corpus.

    "pruned" multiplies every non-informative source's times by a
    per-source drift factor in [1 - prune_shift, 1 + prune_shift];
    planted informative stats are left alone. "cross_gpu" applies a
    per-source gain in [1/(1+gpu_shift), 1+gpu_shift] plus an additive
    per-source offset to all sources, informative ones included. Gains are
    drawn once per source (not per profile), uniformly across a source's
    stats so ordering invariants survive.
    """
    if variant not in ("pruned", "cross_gpu"):
        raise SynthSpecError(f"unknown variant {variant!r}")
    spec = spec or PerturbationSpec()
    sources = sorted(
        {("k", k.name) for profile, _ in corpus for k in profile.kernels}
        | {("a", a.name) for profile, _ in corpus for a in profile.api_calls}
        | {("s", s.signal) for profile, _ in corpus for s in profile.system}
    )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 2])))
    gains, offsets = {}, {}
    for key in sources:
        if variant == "pruned":
            lo, hi = 1.0 - spec.prune_shift, 1.0 + spec.prune_shift
            gains[key] = float(rng.uniform(lo, hi))
            offsets[key] = 0.0
        else:
            hi = 1.0 + spec.gpu_shift
            gains[key] = float(rng.uniform(1.0 / hi, hi))
            offsets[key] = float(rng.uniform(0.0, spec.gpu_offset_us))

    out = []
    for profile, label in corpus:
        kernels = []
        for k in profile.kernels:
            protect = (
                _INFORMATIVE_BY_SOURCE.get(k.name, set())
                if variant == "pruned"
                else set()
            )
            kernels.append(_variant_stat(k, gains[("k", k.name)], offsets[("k", k.name)], protect))
        apis = [
            _variant_stat(a, gains[("a", a.name)], offsets[("a", a.name)], set())
            for a in profile.api_calls
        ]
        system = []
        for s in profile.system:
            g = gains[("s", s.signal)]
            system.append(
                SystemSignalStat(
                    device=s.device,
                    signal=s.signal,
                    sample_count=s.sample_count,
                    avg=s.avg * g,
                    min=s.min * g,
                    max=s.max * g,
                )
            )
        out.append(
            (
                AggregateProfile(
                    kernels=tuple(kernels),
                    api_calls=tuple(apis),
                    system=tuple(system),
                    source_meta=profile.source_meta,
                ),
                label,
            )
        )
    return out
