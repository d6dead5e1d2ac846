"""Parser for aggregate-mode GPU profiler logs (CSV export).

Expected document layout:

    ==1234== NVPROF is profiling process 1234, command: ./victim
    ==1234== Profiling result:
    "Type","Time(%)","Time","Calls","Avg","Min","Max","Name"
    ,%,ms,,us,us,ms,
    "GPU activities",44.39,12.80,370,34.61,14.56,0.06,"void cudnn::..."
    ...
    "API calls",86.69,5375.96,364,14769.12,3.85,5361.14,"cudaMemcpyAsync"
    ==1234== System profiling result:
    "Device","System Signal","Sample Count","Avg","Min","Max"
    "Quadro RTX 8000","SM Clock (MHz)",66,1378.41,300,1395

Comment lines start with ``==``. The units row after the activity header is
optional; without it, columns default to the conventional units (totals in
ms, avg/min in us, max in ms). Duration cells may also carry their own
suffix ("12.80ms"). The Type cell opens a section ("GPU activities" or
"API calls") and may be left empty on continuation rows, as the profiler
emits it.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .errors import ProfileParseError, UnitError
from .profile import (
    AggregateProfile,
    ApiCallStat,
    KernelStat,
    SourceMeta,
    SystemSignalStat,
    canonicalize_kernel_name,
)

ACTIVITY_HEADER = ("Type", "Time(%)", "Time", "Calls", "Avg", "Min", "Max", "Name")
SYSTEM_HEADER = ("Device", "System Signal", "Sample Count", "Avg", "Min", "Max")

# Default units per activity column, used when no units row is present.
_DEFAULT_UNITS = {"Time": "ms", "Avg": "us", "Min": "us", "Max": "ms"}

_US_PER_UNIT = {
    "s": Decimal(1_000_000),
    "ms": Decimal(1000),
    "us": Decimal(1),
    "ns": Decimal("0.001"),
}

_DURATION_RE = re.compile(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Z]*)")


def parse_duration(token: str, default_unit: str | None = None) -> float:
    """Parse a duration token to microseconds.

    The unit comes from the token suffix when present, else from
    ``default_unit``. Conversion goes through Decimal so decimal inputs are
    exact within double precision ("12.80ms" -> 12800.0, not 12800.000...2).
    """
    return float(_duration_us(token, default_unit))


def _duration_us(token: str, default_unit: str | None) -> Decimal:
    t = token.strip()
    m = _DURATION_RE.fullmatch(t)
    if m is None:
        raise ProfileParseError(f"malformed duration token {token!r}")
    number, suffix = m.group(1), m.group(2)
    unit = suffix if suffix else default_unit
    if unit is None:
        raise UnitError(f"duration token {token!r} has no unit and no default")
    if unit not in _US_PER_UNIT:
        raise UnitError(f"unknown time unit {unit!r} in token {token!r}")
    try:
        value = Decimal(number)
    except InvalidOperation:
        raise ProfileParseError(f"malformed number {number!r}") from None
    return value * _US_PER_UNIT[unit]


@dataclass(frozen=True)
class Section:
    kind: str  # "activities" | "system"
    header_line: int  # 1-based line number of the header row
    start: int  # first data-candidate line (1-based)
    end: int  # exclusive


@dataclass(frozen=True)
class RawLogDocument:
    lines: tuple[str, ...]
    sections: tuple[Section, ...]
    path: str | None = None


def _split_row(line: str) -> list[str]:
    return next(csv.reader(io.StringIO(line)))


def scan_document(text: str, path: str | None = None) -> RawLogDocument:
    lines = tuple(text.splitlines())
    headers: list[tuple[str, int]] = []
    for i, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("=="):
            continue
        cells = [c.strip() for c in _split_row(stripped)]
        if not cells:
            continue
        if cells[0] == "Type":
            if tuple(cells) != ACTIVITY_HEADER:
                raise ProfileParseError(
                    f"unexpected activity header {cells!r}", line=i, path=path
                )
            headers.append(("activities", i))
        elif cells[0] == "Device":
            if tuple(cells) != SYSTEM_HEADER:
                raise ProfileParseError(
                    f"unexpected system header {cells!r}", line=i, path=path
                )
            headers.append(("system", i))
    sections = []
    for idx, (kind, header_line) in enumerate(headers):
        end = headers[idx + 1][1] if idx + 1 < len(headers) else len(lines) + 1
        sections.append(Section(kind=kind, header_line=header_line, start=header_line + 1, end=end))
    return RawLogDocument(lines=lines, sections=tuple(sections), path=path)


def _is_units_row(cells: list[str]) -> bool:
    known = {"%", "s", "ms", "us", "ns"}
    stripped = [c.strip() for c in cells]
    return any(stripped) and all(c in known for c in stripped if c)


class _StatAccumulator:
    """Merges rows that canonicalize to the same name."""

    def __init__(self):
        self.order: list[str] = []
        self.rows: dict[str, dict] = {}

    def add(self, name, time_pct, total_us, calls, avg_us, min_us, max_us):
        if name not in self.rows:
            self.order.append(name)
            self.rows[name] = {
                "time_pct": time_pct,
                "total_us": total_us,
                "calls": calls,
                "avg_us": avg_us,
                "min_us": min_us,
                "max_us": max_us,
                "merged": False,
            }
            return
        r = self.rows[name]
        r["time_pct"] += time_pct
        r["total_us"] += total_us
        r["calls"] += calls
        r["min_us"] = min(r["min_us"], min_us)
        r["max_us"] = max(r["max_us"], max_us)
        r["merged"] = True

    def build(self, cls, path):
        out = []
        for name in self.order:
            r = self.rows[name]
            total_us = float(r["total_us"])
            avg_us = total_us / r["calls"] if r["merged"] else float(r["avg_us"])
            try:
                out.append(
                    cls(
                        name=name,
                        time_pct=r["time_pct"],
                        total_time_ms=float(r["total_us"] * Decimal("0.001")),
                        calls=r["calls"],
                        avg_us=avg_us,
                        min_us=float(r["min_us"]),
                        max_ms=float(r["max_us"] * Decimal("0.001")),
                    )
                )
            except Exception as exc:
                raise ProfileParseError(
                    f"merged rows for {name!r} are irreconcilable: {exc}", path=path
                ) from exc
        return out


def parse_log(doc: RawLogDocument) -> AggregateProfile:
    """Parse a scanned document into an AggregateProfile.

    Rows whose names canonicalize identically are merged: calls and totals
    summed, avg recomputed as total/calls, min of mins, max of maxes.
    """
    if not any(s.kind == "activities" for s in doc.sections):
        raise ProfileParseError("no activity section header found", path=doc.path)

    kernels = _StatAccumulator()
    api_calls = _StatAccumulator()
    system: list[SystemSignalStat] = []
    device_seen: str | None = None

    for section in doc.sections:
        units: dict[str, str] = dict(_DEFAULT_UNITS)
        current = None
        first_data_row = True
        for lineno in range(section.start, section.end):
            raw = doc.lines[lineno - 1]
            stripped = raw.strip()
            if not stripped or stripped.startswith("=="):
                continue
            cells = _split_row(stripped)
            if section.kind == "activities":
                if first_data_row and _is_units_row(cells):
                    first_data_row = False
                    header_units = {}
                    for col, cell in zip(ACTIVITY_HEADER, (c.strip() for c in cells)):
                        if cell and cell != "%":
                            header_units[col] = cell
                    units.update(header_units)
                    continue
                first_data_row = False
                if len(cells) != len(ACTIVITY_HEADER):
                    raise ProfileParseError(
                        f"expected {len(ACTIVITY_HEADER)} columns, got {len(cells)}",
                        line=lineno,
                        path=doc.path,
                    )
                row = dict(zip(ACTIVITY_HEADER, cells))
                type_cell = row["Type"].strip()
                if type_cell:
                    if type_cell == "GPU activities":
                        current = kernels
                    elif type_cell == "API calls":
                        current = api_calls
                    else:
                        raise ProfileParseError(
                            f"unknown section type {type_cell!r}", line=lineno, path=doc.path
                        )
                if current is None:
                    raise ProfileParseError(
                        "data row before any section type", line=lineno, path=doc.path
                    )
                try:
                    time_pct = float(row["Time(%)"].strip().rstrip("%"))
                    calls = int(row["Calls"].strip())
                    total_us = _duration_us(row["Time"], units["Time"])
                    avg_us = _duration_us(row["Avg"], units["Avg"])
                    min_us = _duration_us(row["Min"], units["Min"])
                    max_us = _duration_us(row["Max"], units["Max"])
                except ProfileParseError as exc:
                    if exc.line is None:
                        raise type(exc)(exc.message, line=lineno, path=doc.path) from None
                    raise
                except ValueError as exc:
                    raise ProfileParseError(str(exc), line=lineno, path=doc.path) from None
                name = canonicalize_kernel_name(row["Name"])
                current.add(name, time_pct, total_us, calls, avg_us, min_us, max_us)
            else:
                if len(cells) != len(SYSTEM_HEADER):
                    raise ProfileParseError(
                        f"expected {len(SYSTEM_HEADER)} columns, got {len(cells)}",
                        line=lineno,
                        path=doc.path,
                    )
                row = dict(zip(SYSTEM_HEADER, cells))
                try:
                    stat = SystemSignalStat(
                        device=row["Device"].strip(),
                        signal=row["System Signal"].strip(),
                        sample_count=int(row["Sample Count"].strip()),
                        avg=float(row["Avg"].strip()),
                        min=float(row["Min"].strip()),
                        max=float(row["Max"].strip()),
                    )
                except ValueError as exc:
                    raise ProfileParseError(str(exc), line=lineno, path=doc.path) from None
                system.append(stat)
                if device_seen is None:
                    device_seen = row["Device"].strip()

    meta = SourceMeta(device=device_seen) if device_seen else None
    return AggregateProfile(
        kernels=tuple(kernels.build(KernelStat, doc.path)),
        api_calls=tuple(api_calls.build(ApiCallStat, doc.path)),
        system=tuple(system),
        source_meta=meta,
    )


def parse_log_text(text: str, path: str | None = None) -> AggregateProfile:
    return parse_log(scan_document(text, path=path))


def parse_log_file(path) -> AggregateProfile:
    with open(path, encoding="utf-8") as fh:
        return parse_log_text(fh.read(), path=str(path))


def load_corpus(paths, labels) -> list[tuple[AggregateProfile, str]]:
    """Parse a list of log files into (profile, label) pairs, order kept."""
    paths = list(paths)
    labels = list(labels)
    if len(paths) != len(labels):
        raise ValueError(f"{len(paths)} paths but {len(labels)} labels")
    return [(parse_log_file(p), lab) for p, lab in zip(paths, labels)]


def format_log(profile: AggregateProfile, pid: int = 0, command: str = "app") -> str:
    """Render a profile back into the CSV log format this module parses.

    Every value is written with repr so a parse round trip reproduces the
    profile bit for bit.
    """
    out = io.StringIO()
    out.write(f"=={pid}== NVPROF is profiling process {pid}, command: {command}\n")
    out.write(f"=={pid}== Profiling result:\n")
    writer = csv.writer(out, quoting=csv.QUOTE_ALL, lineterminator="\n")
    writer.writerow(ACTIVITY_HEADER)
    out.write(",%,ms,,us,us,ms,\n")

    def activity_rows(stats, section):
        for i, s in enumerate(stats):
            writer.writerow(
                [
                    section if i == 0 else "",
                    repr(s.time_pct),
                    repr(s.total_time_ms),
                    str(s.calls),
                    repr(s.avg_us),
                    repr(s.min_us),
                    repr(s.max_ms),
                    s.name,
                ]
            )

    activity_rows(profile.kernels, "GPU activities")
    activity_rows(profile.api_calls, "API calls")
    if profile.system:
        out.write(f"=={pid}== System profiling result:\n")
        writer.writerow(SYSTEM_HEADER)
        for s in profile.system:
            writer.writerow(
                [s.device, s.signal, str(s.sample_count), repr(s.avg), repr(s.min), repr(s.max)]
            )
    return out.getvalue()
