"""Parsers for the raw artifacts of one CU-DU load-test run.

Every parser is a pure function over text. Record-level problems are
appended to an optional ``diagnostics`` list instead of aborting the
whole file; only structural problems (bad header, unreadable report,
missing mandatory artifact) raise.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Union

from .errors import EmptyFlowReport, FlowReportError, IngestError, ManifestError

FRAMES_PER_HYPERFRAME = 1024


class StackId(str, Enum):
    OAI = "OAI"
    SRK = "SRK"


class Subject(str, Enum):
    CU = "CU"
    DU = "DU"
    HOST = "HOST"
    GPU = "GPU"


@dataclass(frozen=True)
class PhyConfig:
    n_prb: int
    n_sc: int
    n_sym: int
    f_slot: int
    q_m: int
    n_ldpc_threads: int = 1

    def __post_init__(self):
        for name in ("n_prb", "n_sc", "n_sym", "f_slot", "q_m", "n_ldpc_threads"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
                raise ValueError(f"PhyConfig.{name} must be a positive integer, got {value!r}")

    @property
    def slots_per_frame(self) -> int:
        # 10 ms radio frames
        if self.f_slot % 100:
            raise ValueError(f"f_slot={self.f_slot} is not a whole number of slots per 10 ms frame")
        return self.f_slot // 100


@dataclass(frozen=True)
class RunManifest:
    stack_id: StackId
    ue_count: int
    run_duration_s: float
    cu_cores: frozenset[int]
    du_cores: frozenset[int]
    host_core_count: int
    phy: PhyConfig
    sample_interval_s: float
    artifact_paths: dict[str, Path] = field(default_factory=dict, hash=False)
    start_epoch_ms: int | None = None

    def __post_init__(self):
        if self.ue_count < 0:
            raise ManifestError(f"ue_count must be >= 0, got {self.ue_count}")
        if self.sample_interval_s <= 0:
            raise ManifestError(f"sample_interval_s must be > 0, got {self.sample_interval_s}")
        if self.run_duration_s <= 0:
            raise ManifestError(f"run_duration_s must be > 0, got {self.run_duration_s}")
        if self.host_core_count < 1:
            raise ManifestError(f"host_core_count must be >= 1, got {self.host_core_count}")
        overlap = self.cu_cores & self.du_cores
        if overlap:
            raise ManifestError(f"cu_cores and du_cores overlap on {sorted(overlap)}")


@dataclass(frozen=True)
class LdpcTiming:
    avg_call_us: float
    per_seg_us: float

    @property
    def segments_per_call(self) -> float:
        return self.avg_call_us / self.per_seg_us if self.per_seg_us > 0 else float("nan")


@dataclass(frozen=True)
class SlotMarker:
    frame: int
    slot: int


@dataclass(frozen=True)
class Other:
    raw: str


Payload = Union[LdpcTiming, SlotMarker, Other]


@dataclass(frozen=True)
class DuLogRecord:
    epoch_ms: int
    source_tag: str
    stack_clock_s: float
    payload: Payload


@dataclass(frozen=True)
class FlowReport:
    ue_id: str
    goodput_bps: float
    bytes_transferred: int
    duration_s: float
    complete: bool
    # (seconds, bytes) per reporting interval
    intervals: tuple[tuple[float, int], ...] = ()

    @property
    def estimated(self) -> bool:
        return not self.complete


@dataclass(frozen=True)
class ResourceSample:
    epoch_ms: int
    subject: Subject
    cpu_core_equiv_pct: float | None = None
    gpu_util_pct: float | None = None
    gpu_power_w: float | None = None

    def __post_init__(self):
        values = (self.cpu_core_equiv_pct, self.gpu_util_pct, self.gpu_power_w)
        if all(v is None for v in values):
            raise ValueError("resource sample carries no measurement")
        if any(v is not None and v < 0 for v in values):
            raise ValueError("negative resource measurement")


@dataclass(frozen=True)
class TelemetryEvent:
    epoch_ms: int
    message_count: int


@dataclass(frozen=True)
class RunBundle:
    manifest: RunManifest
    du_records: tuple[DuLogRecord, ...]
    flows: tuple[FlowReport, ...]
    samples: tuple[ResourceSample, ...]
    telemetry: tuple[TelemetryEvent, ...]
    # UEs whose report held no usable data at all
    failed_flows: tuple[str, ...] = ()
    diagnostics: tuple[str, ...] = ()
    has_gpu_capture: bool = False
    has_telemetry_capture: bool = False

    def samples_for(self, subject: Subject) -> list[ResourceSample]:
        return [s for s in self.samples if s.subject is subject]

    @property
    def ldpc_records(self) -> list[DuLogRecord]:
        return [r for r in self.du_records if isinstance(r.payload, LdpcTiming)]

    @property
    def slot_records(self) -> list[DuLogRecord]:
        return [r for r in self.du_records if isinstance(r.payload, SlotMarker)]


# ---------------------------------------------------------------- DU log

_LDPC_RE = re.compile(
    r"\[NR_PHY\]\s+I\s+(?:CPU|CUDA|GPU) LDPC decoder:\s*(?P<call>[0-9.eE+-]+)\s*us\s*"
    r"\(\s*(?P<seg>[0-9.eE+-]+)\s*us\s*/\s*seg\s*\)"
)
_SLOT_RE = re.compile(r"\[NR_MAC\]\s+I\s+Frame\.Slot\s+(?P<frame>\d+)\.(?P<slot>\d+)\s*$")


def parse_du_log(lines: Iterable[str], diagnostics: list[str] | None = None) -> list[DuLogRecord]:
    """Parse DU log lines in order.

    Lines whose prefix cannot be read are reported in ``diagnostics`` and
    skipped. LDPC timing and Frame.Slot lines get typed payloads; every
    other well-formed line is kept as ``Other``.
    """
    diag = diagnostics if diagnostics is not None else []
    records: list[DuLogRecord] = []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split(None, 3)
        if len(parts) < 4:
            diag.append(f"du_log:{lineno}: truncated record")
            continue
        epoch_tok, tag, clock_tok, message = parts
        try:
            epoch_ms = int(epoch_tok)
        except ValueError:
            diag.append(f"du_log:{lineno}: non-numeric epoch prefix {epoch_tok!r}")
            continue
        try:
            clock = float(clock_tok)
        except ValueError:
            diag.append(f"du_log:{lineno}: non-numeric stack clock {clock_tok!r}")
            continue
        payload: Payload = Other(line)
        if m := _LDPC_RE.search(message):
            try:
                call, seg = float(m["call"]), float(m["seg"])
            except ValueError:
                diag.append(f"du_log:{lineno}: malformed LDPC timing")
            else:
                if call < 0 or seg < 0 or (seg > 0 and call < seg):
                    diag.append(f"du_log:{lineno}: LDPC per-call {call} below per-segment {seg}")
                else:
                    payload = LdpcTiming(call, seg)
        elif m := _SLOT_RE.search(message):
            frame, slot = int(m["frame"]), int(m["slot"])
            if frame >= FRAMES_PER_HYPERFRAME:
                diag.append(f"du_log:{lineno}: frame {frame} outside 0-{FRAMES_PER_HYPERFRAME - 1}")
            else:
                payload = SlotMarker(frame, slot)
        records.append(DuLogRecord(epoch_ms, tag, clock, payload))
    return records


# ---------------------------------------------------------------- flows

def parse_flow_report(document: str, ue_id: str = "?") -> FlowReport:
    """Read one receiver-side iperf3-style JSON report.

    The end-of-test ``sum_received`` wins when present. Otherwise goodput
    is rebuilt from the interval series and the report is marked
    incomplete.
    """
    if not document or not document.strip():
        raise FlowReportError(f"unparseable flow report for UE {ue_id}: empty document")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise FlowReportError(f"unparseable flow report for UE {ue_id}: {exc}") from None
    if not isinstance(doc, dict):
        raise FlowReportError(f"unparseable flow report for UE {ue_id}: top level is not an object")

    intervals = []
    for item in doc.get("intervals") or []:
        s = item.get("sum") if isinstance(item, dict) else None
        if not isinstance(s, dict) or "bytes" not in s or "seconds" not in s:
            continue
        intervals.append((float(s["seconds"]), int(s["bytes"])))

    end = doc.get("end") or {}
    received = end.get("sum_received") if isinstance(end, dict) else None
    if isinstance(received, dict) and "bits_per_second" in received:
        bps = float(received["bits_per_second"])
        if bps < 0:
            raise FlowReportError(f"negative goodput in flow report for UE {ue_id}")
        seconds = float(received.get("seconds", sum(s for s, _ in intervals)))
        nbytes = int(received.get("bytes", round(bps * seconds / 8)))
        return FlowReport(ue_id, bps, nbytes, seconds, True, tuple(intervals))

    if not intervals:
        raise EmptyFlowReport(f"flow report for UE {ue_id} has neither end summary nor intervals")
    covered = sum(s for s, _ in intervals)
    total = sum(b for _, b in intervals)
    if covered <= 0:
        raise EmptyFlowReport(f"flow report for UE {ue_id} covers zero seconds")
    return FlowReport(ue_id, total * 8 / covered, total, covered, False, tuple(intervals))


# ---------------------------------------------------------------- CSV captures

CPU_HEADER = ("epoch_ms", "subject", "cpu_core_equiv_pct")
GPU_HEADER = ("epoch_ms", "subject", "gpu_util_pct", "gpu_power_w")
TELEMETRY_HEADER = ("epoch_ms", "message_count")
_CPU_SUBJECTS = {"cu": Subject.CU, "du": Subject.DU, "host": Subject.HOST}


def _csv_rows(document: str, header: tuple[str, ...], name: str, diag: list[str]):
    """Yield (lineno, fields); a header line is optional but must match when present."""
    lines = document.splitlines()
    if not any(l.strip() for l in lines):
        diag.append(f"{name}: empty capture")
        return
    first = True
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if first:
            first = False
            if not _is_int(fields[0]):
                if tuple(fields) != header:
                    raise IngestError(
                        f"{name}: header mismatch, expected columns {','.join(header)}, got {line.strip()}"
                    )
                continue
        yield lineno, fields


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def _opt_float(tok: str) -> float | None:
    return float(tok) if tok not in ("", "NA", "nan") else None


def parse_resource_samples(
    document: str, subject_kind: str, diagnostics: list[str] | None = None
) -> list[ResourceSample]:
    """Parse a ``cpu`` (cu/du/host rows) or ``gpu`` sample capture."""
    diag = diagnostics if diagnostics is not None else []
    if subject_kind not in ("cpu", "gpu"):
        raise ValueError(f"subject_kind must be 'cpu' or 'gpu', got {subject_kind!r}")
    header = CPU_HEADER if subject_kind == "cpu" else GPU_HEADER
    name = f"{subject_kind}_samples"
    out: list[ResourceSample] = []
    for lineno, fields in _csv_rows(document, header, name, diag):
        try:
            if len(fields) != len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(fields)}")
            epoch = int(fields[0])
            subj = fields[1].lower()
            if subject_kind == "cpu":
                if subj not in _CPU_SUBJECTS:
                    raise ValueError(f"unknown subject {fields[1]!r}")
                sample = ResourceSample(epoch, _CPU_SUBJECTS[subj], cpu_core_equiv_pct=float(fields[2]))
            else:
                if subj != "gpu":
                    raise ValueError(f"unknown subject {fields[1]!r}")
                sample = ResourceSample(
                    epoch, Subject.GPU, gpu_util_pct=_opt_float(fields[2]), gpu_power_w=_opt_float(fields[3])
                )
        except ValueError as exc:
            diag.append(f"{name}:{lineno}: {exc}")
            continue
        out.append(sample)
    out.sort(key=lambda s: s.epoch_ms)
    return out


def parse_telemetry_capture(document: str, diagnostics: list[str] | None = None) -> list[TelemetryEvent]:
    diag = diagnostics if diagnostics is not None else []
    events = []
    for lineno, fields in _csv_rows(document, TELEMETRY_HEADER, "telemetry", diag):
        if len(fields) != 2:
            diag.append(f"telemetry:{lineno}: expected 2 fields, got {len(fields)}")
            continue
        try:
            epoch, count = int(fields[0]), int(fields[1])
        except ValueError:
            diag.append(f"telemetry:{lineno}: non-integer field")
            continue
        if count < 0:
            raise IngestError(f"telemetry:{lineno}: negative message count {count}")
        events.append(TelemetryEvent(epoch, count))
    events.sort(key=lambda e: e.epoch_ms)
    return events


# ---------------------------------------------------------------- manifest

_REQUIRED_KEYS = (
    "stack_id", "ue_count", "run_duration_s", "cu_cores", "du_cores", "host_core_count",
    "n_prb", "n_sc", "n_sym", "f_slot", "q_m", "n_ldpc_threads", "sample_interval_s",
    "du_log", "flows_dir", "cpu_samples",
)
PATH_KEYS = ("du_log", "flows_dir", "cpu_samples", "gpu_samples", "telemetry")


def parse_core_set(text: str) -> frozenset[int]:
    """``"8-11"`` or ``"6,7"`` or a mix like ``"0-3,8"``."""
    cores: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep:
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"descending core range {part!r}")
            cores.update(range(a, b + 1))
        else:
            cores.add(int(part))
    return frozenset(cores)


def format_core_set(cores: Iterable[int]) -> str:
    return ",".join(str(c) for c in sorted(cores))


def read_key_values(text: str, source: str = "manifest") -> dict[str, str]:
    kv: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ManifestError(f"{source}:{lineno}: expected key=value")
        kv[key.strip()] = value.strip()
    return kv


def parse_manifest(text: str, base_dir: Path | str = ".") -> RunManifest:
    base = Path(base_dir)
    kv = read_key_values(text)
    missing = [k for k in _REQUIRED_KEYS if k not in kv]
    if missing:
        raise ManifestError(f"manifest missing required keys: {', '.join(missing)}")
    try:
        phy = PhyConfig(
            n_prb=int(kv["n_prb"]), n_sc=int(kv["n_sc"]), n_sym=int(kv["n_sym"]),
            f_slot=int(kv["f_slot"]), q_m=int(kv["q_m"]), n_ldpc_threads=int(kv["n_ldpc_threads"]),
        )
        paths = {k: base / kv[k] for k in PATH_KEYS if kv.get(k)}
        return RunManifest(
            stack_id=StackId(kv["stack_id"].upper()),
            ue_count=int(kv["ue_count"]),
            run_duration_s=float(kv["run_duration_s"]),
            cu_cores=parse_core_set(kv["cu_cores"]),
            du_cores=parse_core_set(kv["du_cores"]),
            host_core_count=int(kv["host_core_count"]),
            phy=phy,
            sample_interval_s=float(kv["sample_interval_s"]),
            artifact_paths=paths,
            start_epoch_ms=int(kv["start_epoch_ms"]) if kv.get("start_epoch_ms") else None,
        )
    except ManifestError:
        raise
    except ValueError as exc:
        raise ManifestError(f"invalid manifest value: {exc}") from None


def render_manifest(m: RunManifest, relative_to: Path | None = None) -> str:
    def rel(p: Path) -> str:
        if relative_to is not None:
            try:
                return str(Path(p).relative_to(relative_to))
            except ValueError:
                pass
        return str(p)

    lines = [
        f"stack_id={m.stack_id.value}",
        f"ue_count={m.ue_count}",
        f"run_duration_s={m.run_duration_s!r}",
        f"cu_cores={format_core_set(m.cu_cores)}",
        f"du_cores={format_core_set(m.du_cores)}",
        f"host_core_count={m.host_core_count}",
        f"n_prb={m.phy.n_prb}",
        f"n_sc={m.phy.n_sc}",
        f"n_sym={m.phy.n_sym}",
        f"f_slot={m.phy.f_slot}",
        f"q_m={m.phy.q_m}",
        f"n_ldpc_threads={m.phy.n_ldpc_threads}",
        f"sample_interval_s={m.sample_interval_s!r}",
    ]
    if m.start_epoch_ms is not None:
        lines.append(f"start_epoch_ms={m.start_epoch_ms}")
    for key in PATH_KEYS:
        if key in m.artifact_paths:
            lines.append(f"{key}={rel(m.artifact_paths[key])}")
    return "\n".join(lines) + "\n"


def _read(path: Path, what: str) -> str:
    try:
        return path.read_text()
    except FileNotFoundError:
        raise IngestError(f"missing {what} artifact: {path}") from None
    except OSError as exc:
        raise IngestError(f"unreadable {what} artifact {path}: {exc}") from None


def load_run_bundle(manifest_path: Path | str) -> RunBundle:
    """Parse a run manifest and every artifact it references."""
    manifest_path = Path(manifest_path)
    manifest = parse_manifest(_read(manifest_path, "manifest"), manifest_path.parent)
    paths = manifest.artifact_paths
    diag: list[str] = []

    du_records = parse_du_log(_read(paths["du_log"], "du_log").splitlines(), diag)
    du_records.sort(key=lambda r: r.epoch_ms)  # stable

    flows_dir = paths["flows_dir"]
    if not flows_dir.is_dir():
        raise IngestError(f"missing flows_dir artifact: {flows_dir}")
    flows: list[FlowReport] = []
    failed: list[str] = []
    for path in sorted(flows_dir.glob("*.json")):
        try:
            flows.append(parse_flow_report(_read(path, "flow report"), path.stem))
        except EmptyFlowReport as exc:
            failed.append(path.stem)
            diag.append(str(exc))
        except FlowReportError as exc:
            raise FlowReportError(f"{exc} ({path})") from None
    if len(flows) + len(failed) > manifest.ue_count:
        raise IngestError(
            f"{flows_dir}: {len(flows) + len(failed)} flow reports for ue_count={manifest.ue_count}"
        )

    samples = parse_resource_samples(_read(paths["cpu_samples"], "cpu_samples"), "cpu", diag)
    has_gpu = "gpu_samples" in paths and paths["gpu_samples"].exists()
    if has_gpu:
        samples += parse_resource_samples(_read(paths["gpu_samples"], "gpu_samples"), "gpu", diag)
        samples.sort(key=lambda s: s.epoch_ms)
    elif "gpu_samples" in paths:
        diag.append(f"gpu_samples listed but absent: {paths['gpu_samples']}")

    has_tel = "telemetry" in paths and paths["telemetry"].exists()
    telemetry = parse_telemetry_capture(_read(paths["telemetry"], "telemetry"), diag) if has_tel else []

    return RunBundle(
        manifest=manifest,
        du_records=tuple(du_records),
        flows=tuple(flows),
        samples=tuple(samples),
        telemetry=tuple(telemetry),
        failed_flows=tuple(failed),
        diagnostics=tuple(diag),
        has_gpu_capture=has_gpu,
        has_telemetry_capture=has_tel,
    )


def bundle_start_ms(bundle: RunBundle) -> int:
    """Run start: the manifest value, else the earliest artifact timestamp."""
    if bundle.manifest.start_epoch_ms is not None:
        return bundle.manifest.start_epoch_ms
    stamps = [r.epoch_ms for r in bundle.du_records[:1]]
    stamps += [s.epoch_ms for s in bundle.samples[:1]]
    stamps += [e.epoch_ms for e in bundle.telemetry[:1]]
    if not stamps:
        raise IngestError("cannot infer run start: no timestamped artifacts")
    return min(stamps)


def study_run_paths(study_path: Path | str) -> list[Path]:
    study_path = Path(study_path)
    text = _read(study_path, "study manifest")
    paths = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or key.strip() != "run":
            raise ManifestError(f"{study_path}:{lineno}: expected run=<path>")
        paths.append(study_path.parent / value.strip())
    if not paths:
        raise ManifestError(f"{study_path}: no runs listed")
    return paths


def worker_count(default: int = 4) -> int:
    raw = os.environ.get("RAN_FORENSICS_THREADS", "")
    try:
        return max(1, int(raw)) if raw else default
    except ValueError:
        raise IngestError(f"RAN_FORENSICS_THREADS must be an integer, got {raw!r}") from None


def load_study(study_path: Path | str, max_workers: int | None = None) -> list[RunBundle]:
    """Load every run of a study; runs are parsed in parallel, results keep manifest order."""
    paths = study_run_paths(study_path)
    workers = max_workers or worker_count()
    if workers == 1:
        return [load_run_bundle(p) for p in paths]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(load_run_bundle, paths))
