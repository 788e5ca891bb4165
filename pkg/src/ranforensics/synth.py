"""Generate parseable run-artifact trees from declared ground truth.

Used as the oracle for ingest -> kpi -> fit -> diagnose round trips. With
zero noise every modeled KPI is recoverable: series inside the default
steady-state window are laid out so that both the mean and the
nearest-rank p95 equal the declared values, and slot markers are placed
at wall-clock cadences where the declared RTF advances a whole number of
slots.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .errors import SynthError
from .ingest import (
    FRAMES_PER_HYPERFRAME,
    DuLogRecord,
    FlowReport,
    LdpcTiming,
    Other,
    PhyConfig,
    ResourceSample,
    RunManifest,
    SlotMarker,
    StackId,
    Subject,
    TelemetryEvent,
    parse_core_set,
    format_core_set,
    render_manifest,
)
from .kpi import DEFAULT_HEAD_TRIM_S, DEFAULT_TAIL_TRIM_S

DEFAULT_START_EPOCH_MS = 1772062000000
_CLOCK0_S = 532641.944
_FIRST_FRAME = 768
_LDPC_OFFSET_MS = 43
FLOW_STATUSES = ("complete", "partial", "failed")


@dataclass(frozen=True)
class SeriesModel:
    mean: float
    p95: float | None = None
    sigma_rel: float = 0.0

    @classmethod
    def coerce(cls, value) -> SeriesModel | None:
        if value is None or isinstance(value, SeriesModel):
            return value
        if isinstance(value, (int, float)):
            return cls(float(value))
        if isinstance(value, (list, tuple)):
            return cls(*value)
        return cls(**value)


@dataclass(frozen=True)
class RunTruth:
    ue_count: int
    du_cpu: SeriesModel
    cu_cpu: SeriesModel
    host_pct: SeriesModel  # host-wide percent on the 0-100 scale
    rtf: float
    goodput_mbps: float | None = None  # aggregate T_total; None -> stack power law
    weights: tuple[float, ...] | None = None  # None -> equal split
    flow_status: tuple[str, ...] | None = None  # None -> all complete
    partial_covered_s: float = 30.0
    gpu_util: SeriesModel | None = None
    gpu_power_w: SeriesModel | None = None
    ldpc_call_us: SeriesModel | None = None
    segments_per_call: float = 4.0
    telemetry_rate: int = 50
    telemetry_stall_at_s: float | None = None

    def __post_init__(self):
        if self.ue_count < 0:
            raise SynthError("ue_count must be non-negative")
        for name in ("du_cpu", "cu_cpu", "host_pct", "gpu_util", "gpu_power_w", "ldpc_call_us"):
            object.__setattr__(self, name, SeriesModel.coerce(getattr(self, name)))
            m = getattr(self, name)
            if m is not None and (m.mean < 0 or (m.p95 is not None and m.p95 < 0) or m.sigma_rel < 0):
                raise SynthError(f"{name}: modeled quantities must be non-negative")
        if self.rtf <= 0:
            raise SynthError("rtf must be positive")
        if self.goodput_mbps is not None and self.goodput_mbps < 0:
            raise SynthError("goodput must be non-negative")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            if len(self.weights) != self.ue_count or any(w < 0 for w in self.weights):
                raise SynthError("weights must give one non-negative share per UE")
        if self.flow_status is not None:
            object.__setattr__(self, "flow_status", tuple(self.flow_status))
            if len(self.flow_status) != self.ue_count or set(self.flow_status) - set(FLOW_STATUSES):
                raise SynthError(f"flow_status needs one of {FLOW_STATUSES} per UE")
        if self.telemetry_rate < 0:
            raise SynthError("telemetry_rate must be non-negative")

    def shares(self) -> list[float]:
        w = list(self.weights) if self.weights is not None else [1.0] * self.ue_count
        total = math.fsum(w)
        return [x / total for x in w]

    def statuses(self) -> tuple[str, ...]:
        return self.flow_status if self.flow_status is not None else ("complete",) * self.ue_count


@dataclass(frozen=True)
class GroundTruth:
    """Everything one stack's study is generated from."""

    stack_id: StackId
    runs: tuple[RunTruth, ...]
    phy: PhyConfig = PhyConfig(106, 12, 14, 2000, 4, 4)
    cu_cores: frozenset[int] = frozenset({6, 7})
    du_cores: frozenset[int] = frozenset({8, 9, 10, 11})
    host_core_count: int = 20
    run_duration_s: float = 60.0
    sample_interval_s: float = 0.5
    start_epoch_ms: int = DEFAULT_START_EPOCH_MS
    power_law: tuple[float, float] | None = None
    has_gpu: bool = False
    noise_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "stack_id", StackId(self.stack_id))
        object.__setattr__(self, "runs", tuple(self.runs))
        ns = [r.ue_count for r in self.runs]
        if ns != sorted(ns):
            raise SynthError(f"{self.stack_id.value}: N values must be sorted, got {ns}")
        if len(set(ns)) != len(ns):
            raise SynthError(f"{self.stack_id.value}: duplicate N values {ns}")
        if self.cu_cores & self.du_cores:
            raise SynthError("cu_cores and du_cores must be disjoint")

    def goodput_for(self, run: RunTruth) -> float | None:
        if run.ue_count == 0:
            return None
        if run.goodput_mbps is not None:
            return run.goodput_mbps
        if self.power_law is None:
            raise SynthError(f"N={run.ue_count}: no goodput and no power-law model")
        a, b = self.power_law
        return a * run.ue_count ** b

    # scenario-file form
    def to_dict(self) -> dict:
        d = {
            "stack_id": self.stack_id.value,
            "phy": asdict(self.phy),
            "cu_cores": format_core_set(self.cu_cores),
            "du_cores": format_core_set(self.du_cores),
            "host_core_count": self.host_core_count,
            "run_duration_s": self.run_duration_s,
            "sample_interval_s": self.sample_interval_s,
            "start_epoch_ms": self.start_epoch_ms,
            "power_law": list(self.power_law) if self.power_law else None,
            "has_gpu": self.has_gpu,
            "noise_seed": self.noise_seed,
            "runs": [],
        }
        for r in self.runs:
            rd = asdict(r)
            for k in ("weights", "flow_status"):
                if rd[k] is not None:
                    rd[k] = list(rd[k])
            d["runs"].append(rd)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GroundTruth:
        d = dict(d)
        try:
            runs = tuple(RunTruth(**r) for r in d.pop("runs"))
            if "phy" in d:
                d["phy"] = PhyConfig(**d["phy"])
            for key in ("cu_cores", "du_cores"):
                if key in d:
                    d[key] = parse_core_set(d[key]) if isinstance(d[key], str) else frozenset(d[key])
            if d.get("power_law") is not None:
                d["power_law"] = tuple(d["power_law"])
            return cls(runs=runs, **d)
        except (TypeError, KeyError, ValueError) as exc:
            raise SynthError(f"invalid scenario: {exc}") from None


def load_scenario(text: str) -> list[GroundTruth]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SynthError(f"scenario is not valid JSON: {exc}") from None
    stacks = doc.get("stacks") if isinstance(doc, dict) else None
    if not stacks:
        raise SynthError("scenario must contain a non-empty 'stacks' list")
    seed = doc.get("noise_seed")
    truths = [GroundTruth.from_dict(s) for s in stacks]
    if seed is not None:
        truths = [replace(t, noise_seed=seed) for t in truths]
    return truths


def dump_scenario(truths: Sequence[GroundTruth]) -> str:
    return json.dumps({"stacks": [t.to_dict() for t in truths]}, indent=2) + "\n"


# ---------------------------------------------------------------- series shaping

def two_level_series(n: int, mean: float, p95: float | None) -> list[float]:
    """``n`` values whose mean is ``mean`` and whose nearest-rank p95 is ``p95``."""
    if n <= 0:
        return []
    if p95 is None or p95 == mean:
        return [mean] * n
    rank = (95 * n + 99) // 100
    k = n - rank + 1  # values at or above the p95 rank
    if k >= n:
        raise SynthError(f"cannot shape {n} samples to mean {mean} and p95 {p95}")
    low = (n * mean - k * p95) / (n - k)
    if low < 0 or low > p95:
        raise SynthError(f"mean {mean} and p95 {p95} are incompatible over {n} samples")
    # spread the high values evenly through the window
    return [p95 if (i + 1) * k // n > i * k // n else low for i in range(n)]


def _shaped(stamps: Sequence[int], window: tuple[int, int], model: SeriesModel, rng: random.Random) -> list[float]:
    inside = [i for i, t in enumerate(stamps) if window[0] <= t <= window[1]]
    values = [model.mean] * len(stamps)
    for i, v in zip(inside, two_level_series(len(inside), model.mean, model.p95)):
        values[i] = v
    if model.sigma_rel > 0:
        values = [max(0.0, v * (1 + rng.gauss(0.0, model.sigma_rel))) for v in values]
    return values


def weights_for_jain(n: int, jain: float) -> tuple[float, ...]:
    """Shares where one UE gets ``u`` times the others, chosen so the Jain index equals ``jain``."""
    if n < 1 or not 1 / n <= jain <= 1:
        raise SynthError(f"Jain {jain} unreachable with {n} UEs")
    if n == 1 or jain == 1:
        return (1.0,) * n
    # n J (n - 1 + u^2) = (n - 1 + u)^2, solved for the root u >= 1
    a = n * jain - 1
    b = -2 * (n - 1)
    c = n * jain * (n - 1) - (n - 1) ** 2
    if abs(a) < 1e-15:
        u = -c / b
    else:
        u = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
        if u < 1:
            u = (-b - math.sqrt(b * b - 4 * a * c)) / (2 * a)
    return (u,) + (1.0,) * (n - 1)


def _marker_step_ms(rtf: float, f_slot: int) -> int:
    rate = Fraction(repr(rtf)) * f_slot / 1000  # slots per ms
    q = rate.denominator
    return q * math.ceil(100 / q) if q <= 1000 else 100


# ---------------------------------------------------------------- artifacts

@dataclass
class RunArtifacts:
    """Typed content of one run directory, before rendering."""

    manifest: RunManifest
    du_records: list[DuLogRecord]
    flows: list[FlowReport]
    failed_flows: list[str]
    samples: list[ResourceSample]
    gpu_samples: list[ResourceSample]
    telemetry: list[TelemetryEvent]
    ldpc_label: str = "CPU"
    extra: dict = field(default_factory=dict)


def build_run_artifacts(truth: GroundTruth, run: RunTruth, run_dir: Path | str = ".") -> RunArtifacts:
    run_dir = Path(run_dir)
    rng = random.Random(f"{truth.noise_seed}:{truth.stack_id.value}:{run.ue_count}")
    start = truth.start_epoch_ms
    dur_ms = round(truth.run_duration_s * 1000)
    window = (start + round(DEFAULT_HEAD_TRIM_S * 1000), start + dur_ms - round(DEFAULT_TAIL_TRIM_S * 1000))
    tick_ms = round(truth.sample_interval_s * 1000)
    if tick_ms <= 0:
        raise SynthError("sample_interval_s too small")
    stamps = [start + i * tick_ms for i in range(dur_ms // tick_ms)]

    def clock(epoch: int) -> float:
        return round(_CLOCK0_S + (epoch - start) / 1000, 6)

    # CPU / GPU samples
    samples: list[ResourceSample] = []
    series = {
        Subject.CU: _shaped(stamps, window, run.cu_cpu, rng),
        Subject.DU: _shaped(stamps, window, run.du_cpu, rng),
        Subject.HOST: _shaped(stamps, window, run.host_pct, rng),
    }
    for i, t in enumerate(stamps):
        for subj in (Subject.CU, Subject.DU, Subject.HOST):
            samples.append(ResourceSample(t, subj, cpu_core_equiv_pct=series[subj][i]))
    gpu_samples: list[ResourceSample] = []
    if truth.has_gpu:
        util = _shaped(stamps, window, run.gpu_util or SeriesModel(0.0), rng)
        power = _shaped(stamps, window, run.gpu_power_w or SeriesModel(0.0), rng)
        gpu_samples = [
            ResourceSample(t, Subject.GPU, gpu_util_pct=u, gpu_power_w=p)
            for t, u, p in zip(stamps, util, power)
        ]

    # DU log: LDPC prints at ~1 Hz, slot markers, a few other lines
    tag = "oai-nr-du"
    records: list[DuLogRecord] = []
    if run.ldpc_call_us is not None:
        ldpc_stamps = [start + k * 1000 + _LDPC_OFFSET_MS for k in range(dur_ms // 1000)]
        calls = _shaped(ldpc_stamps, window, run.ldpc_call_us, rng)
        for t, call in zip(ldpc_stamps, calls):
            seg = call / run.segments_per_call
            records.append(DuLogRecord(t, tag, clock(t), LdpcTiming(call, seg)))
    spf = truth.phy.slots_per_frame
    period = FRAMES_PER_HYPERFRAME * spf
    step = _marker_step_ms(run.rtf, truth.phy.f_slot)
    rate = run.rtf * truth.phy.f_slot / 1000
    if step * rate >= period:
        raise SynthError(f"rtf {run.rtf} advances a full hyperframe between markers")
    base = _FIRST_FRAME * spf
    exact_rate = Fraction(repr(run.rtf)) * truth.phy.f_slot / 1000
    for j in range(dur_ms // step + 1):
        t = start + j * step
        pos = (base + round(exact_rate * j * step)) % period
        records.append(DuLogRecord(t, tag, clock(t), SlotMarker(pos // spf, pos % spf)))
    for k in range(0, dur_ms // 1000, 10):
        t = start + k * 1000 + 500
        raw = f"{t}\t{tag}\t{clock(t)!r} [GTPU] I tunnel stats ue_count={run.ue_count}"
        records.append(DuLogRecord(t, tag, clock(t), Other(raw)))
    records.sort(key=lambda r: r.epoch_ms)

    # flows
    flows: list[FlowReport] = []
    failed: list[str] = []
    total_mbps = truth.goodput_for(run)
    for i, (share, status) in enumerate(zip(run.shares(), run.statuses()), 1):
        ue = f"ue{i:02d}"
        if status == "failed":
            failed.append(ue)
            continue
        bps = total_mbps * 1e6 * share
        secs = truth.run_duration_s if status == "complete" else run.partial_covered_s
        whole = int(secs)
        intervals = []
        prev = 0
        for s in range(1, whole + 1):
            cum = round(bps * s / 8)
            intervals.append((1.0, cum - prev))
            prev = cum
        if status == "complete":
            flows.append(FlowReport(ue, bps, round(bps * secs / 8), float(secs), True, tuple(intervals)))
        else:
            covered = float(sum(x for x, _ in intervals))
            nbytes = sum(b for _, b in intervals)
            flows.append(FlowReport(ue, nbytes * 8 / covered, nbytes, covered, False, tuple(intervals)))

    telemetry = []
    for t in stamps:
        stalled = run.telemetry_stall_at_s is not None and t - start >= run.telemetry_stall_at_s * 1000
        telemetry.append(TelemetryEvent(t, 0 if stalled else run.telemetry_rate))

    paths = {
        "du_log": run_dir / "du_logs.tsv",
        "flows_dir": run_dir / "flows",
        "cpu_samples": run_dir / "cpu_samples.csv",
        "telemetry": run_dir / "telemetry.csv",
    }
    if truth.has_gpu:
        paths["gpu_samples"] = run_dir / "gpu_samples.csv"
    manifest = RunManifest(
        stack_id=truth.stack_id,
        ue_count=run.ue_count,
        run_duration_s=truth.run_duration_s,
        cu_cores=truth.cu_cores,
        du_cores=truth.du_cores,
        host_core_count=truth.host_core_count,
        phy=truth.phy,
        sample_interval_s=truth.sample_interval_s,
        artifact_paths=paths,
        start_epoch_ms=start,
    )
    label = "CUDA" if truth.stack_id is StackId.SRK else "CPU"
    return RunArtifacts(manifest, records, flows, failed, samples, gpu_samples, telemetry, label)


# ---------------------------------------------------------------- rendering

def render_du_record(r: DuLogRecord, ldpc_label: str = "CPU") -> str:
    head = f"{r.epoch_ms}\t{r.source_tag}\t{r.stack_clock_s!r}"
    p = r.payload
    if isinstance(p, LdpcTiming):
        return f"{head} [NR_PHY] I {ldpc_label} LDPC decoder: {p.avg_call_us!r:>8} us ({p.per_seg_us!r:>7} us / seg)"
    if isinstance(p, SlotMarker):
        return f"{head} [NR_MAC] I Frame.Slot {p.frame}.{p.slot}"
    return p.raw


def render_flow_report(f: FlowReport | None, run_duration_s: float) -> str:
    intervals = []
    t = 0.0
    for secs, nbytes in (f.intervals if f else ()):
        intervals.append({"sum": {
            "start": t, "end": t + secs, "seconds": secs, "bytes": nbytes,
            "bits_per_second": nbytes * 8 / secs if secs else 0.0,
        }})
        t += secs
    doc: dict = {"start": {"test_start": {"protocol": "TCP", "duration": run_duration_s, "reverse": 0}},
                 "intervals": intervals, "end": {}}
    if f is not None and f.complete:
        doc["end"] = {"sum_received": {
            "start": 0.0, "end": f.duration_s, "seconds": f.duration_s,
            "bytes": f.bytes_transferred, "bits_per_second": f.goodput_bps,
        }}
    return json.dumps(doc, indent=1) + "\n"


def _render_cpu(samples: Sequence[ResourceSample]) -> str:
    lines = ["epoch_ms,subject,cpu_core_equiv_pct"]
    lines += [f"{s.epoch_ms},{s.subject.value.lower()},{s.cpu_core_equiv_pct!r}" for s in samples]
    return "\n".join(lines) + "\n"


def _render_gpu(samples: Sequence[ResourceSample]) -> str:
    lines = ["epoch_ms,subject,gpu_util_pct,gpu_power_w"]
    lines += [f"{s.epoch_ms},gpu,{s.gpu_util_pct!r},{s.gpu_power_w!r}" for s in samples]
    return "\n".join(lines) + "\n"


def _render_telemetry(events: Sequence[TelemetryEvent]) -> str:
    return "\n".join(["epoch_ms,message_count"] + [f"{e.epoch_ms},{e.message_count}" for e in events]) + "\n"


def write_run_artifacts(art: RunArtifacts, run_dir: Path) -> Path:
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        paths = art.manifest.artifact_paths
        paths["flows_dir"].mkdir(exist_ok=True)
        for stale in paths["flows_dir"].glob("*.json"):
            stale.unlink()
        paths["du_log"].write_text("\n".join(render_du_record(r, art.ldpc_label) for r in art.du_records) + "\n")
        by_ue = {f.ue_id: f for f in art.flows}
        for ue in sorted(list(by_ue) + art.failed_flows):
            (paths["flows_dir"] / f"{ue}.json").write_text(
                render_flow_report(by_ue.get(ue), art.manifest.run_duration_s)
            )
        paths["cpu_samples"].write_text(_render_cpu(art.samples))
        if "gpu_samples" in paths:
            paths["gpu_samples"].write_text(_render_gpu(art.gpu_samples))
        paths["telemetry"].write_text(_render_telemetry(art.telemetry))
        manifest_path = run_dir / "run.manifest"
        manifest_path.write_text(render_manifest(art.manifest, relative_to=run_dir))
    except OSError as exc:
        raise SynthError(f"cannot write run artifacts under {run_dir}: {exc}") from None
    return manifest_path


def run_dir_name(stack: StackId, n: int) -> str:
    return f"{stack.value.lower()}_n{n:02d}"


def generate_bundle_files(truth: GroundTruth, run: RunTruth | int, output_dir: Path | str) -> Path:
    """Write one run directory; returns its manifest path."""
    if isinstance(run, int):
        matches = [r for r in truth.runs if r.ue_count == run]
        if not matches:
            raise SynthError(f"no run with N={run} in {truth.stack_id.value} truth")
        run = matches[0]
    output_dir = Path(output_dir)
    return write_run_artifacts(build_run_artifacts(truth, run, output_dir), output_dir)


def generate_study(truths: Sequence[GroundTruth], output_dir: Path | str) -> Path:
    """Write every run of every stack plus ``study.manifest`` listing them."""
    if not truths:
        raise SynthError("study needs at least one stack")
    seen = set()
    for t in truths:
        if len(t.runs) < 2:
            raise SynthError(f"{t.stack_id.value}: study needs at least two N values")
        for r in t.runs:
            key = (t.stack_id, r.ue_count)
            if key in seen:
                raise SynthError(f"duplicate run {t.stack_id.value} N={r.ue_count}")
            seen.add(key)
    root = Path(output_dir)
    lines = ["# study manifest: one run manifest per line, relative to this file"]
    for t in truths:
        for r in t.runs:
            name = run_dir_name(t.stack_id, r.ue_count)
            generate_bundle_files(t, r, root / name)
            lines.append(f"run={name}/run.manifest")
    study = root / "study.manifest"
    try:
        study.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise SynthError(f"cannot write {study}: {exc}") from None
    return study


# ---------------------------------------------------------------- built-in scenarios

# Reference CU-DU load measurements (mean, p95). RTF is known only at N=1 (OAI 1.84, SRK 1.70) and
# N=12 (~0.28), plus ">3" at N=0; intermediate RTF values are illustrative.
_CU_DU_LOAD = {
    StackId.OAI: [
        # N, T_total, J, DU, CU, SYS, LDPC/call, GPU util, GPU W, RTF
        (0, None, None, (210.16, 213.27), (1.71, 2.29), (305.6, 336.6), (79.87, 91.10), None, None, 3.2),
        (1, 114.59, 1.0, (324.79, 326.77), (22.98, 24.43), (534.6, 561.6), (255.86, 262.09), None, None, 1.84),
        (3, 65.21, 0.999997, (289.93, 291.73), (16.80, 17.68), (502.2, 527.4), (262.60, 268.36), None, None, 1.05),
        (6, 35.09, 0.999484, (205.54, 207.18), (9.02, 10.63), (391.6, 428.6), (275.27, 286.05), None, None, 0.55),
        (12, 16.35, 0.999997, (162.38, 164.92), (5.69, 6.89), (338.2, 359.0), (273.18, 293.63), None, None, 0.28),
    ],
    StackId.SRK: [
        (0, None, None, (212.87, 216.09), (1.87, 2.84), (301.6, 340.0), None, (1.29, 3.70), (11.48, 12.11), 3.1),
        (1, 103.34, 1.0, (349.31, 351.64), (20.73, 22.54), (557.2, 594.8), (316.02, 350.83), (44.85, 47.00), (38.48, 39.11), 1.70),
        (3, 66.44, 1.0, (329.73, 339.57), (17.21, 18.11), (585.0, 636.4), (316.90, 347.89), (29.28, 34.00), (29.73, 30.54), 1.0),
        (6, 35.01, 0.999930, (231.60, 244.69), (9.77, 10.75), (484.6, 521.6), (369.47, 392.66), (19.34, 22.00), (22.25, 23.14), 0.52),
        (12, 16.15, 0.999998, (172.91, 176.62), (5.80, 6.78), (389.2, 414.0), (345.17, 373.05), (9.45, 11.00), (17.08, 17.60), 0.28),
    ],
}


def cu_du_load_truths(noise_seed: int = 0) -> list[GroundTruth]:
    """Two-stack study mirroring the reference CU-DU load measurements."""
    truths = []
    for stack, rows in _CU_DU_LOAD.items():
        runs = []
        for n, t, j, du, cu, sys_, ldpc, gu, gp, rtf_value in rows:
            status = None
            if stack is StackId.SRK and n == 12:
                status = ("complete",) * 10 + ("partial",) * 2  # success rate 10/12
            runs.append(RunTruth(
                ue_count=n,
                goodput_mbps=t,
                weights=weights_for_jain(n, j) if n else None,
                flow_status=status,
                du_cpu=SeriesModel(*du),
                cu_cpu=SeriesModel(*cu),
                host_pct=SeriesModel(sys_[0] / 20, sys_[1] / 20),
                rtf=rtf_value,
                ldpc_call_us=SeriesModel(*ldpc) if ldpc else None,
                gpu_util=SeriesModel(*gu) if gu else None,
                gpu_power_w=SeriesModel(*gp) if gp else None,
                telemetry_rate=50 if n else 0,
                telemetry_stall_at_s=20.0 if n == 12 else None,
            ))
        phy = PhyConfig(106, 12, 14, 2000, 4, 4 if stack is StackId.OAI else 1)
        truths.append(GroundTruth(stack, tuple(runs), phy=phy, has_gpu=stack is StackId.SRK, noise_seed=noise_seed))
    return truths


def compute_bound_truth(noise_seed: int = 0) -> GroundTruth:
    """Fair, real-time, DU CPU climbing into its 4-core budget while goodput plateaus."""
    runs = []
    for n, t, du in ((1, 100.0, 250.0), (3, 140.0, 390.0), (6, 145.0, 398.0)):
        runs.append(RunTruth(
            ue_count=n, goodput_mbps=t, du_cpu=SeriesModel(du, du), cu_cpu=SeriesModel(15.0),
            host_pct=SeriesModel(25.0), rtf=1.0, ldpc_call_us=SeriesModel(260.0, 270.0),
        ))
    return GroundTruth(StackId.OAI, tuple(runs), noise_seed=noise_seed)


def unfair_truth(noise_seed: int = 0) -> GroundTruth:
    """One UE starves the rest (Jain 0.62 at N=4)."""
    runs = (
        RunTruth(ue_count=1, goodput_mbps=110.0, du_cpu=SeriesModel(320.0), cu_cpu=SeriesModel(20.0),
                 host_pct=SeriesModel(26.0), rtf=1.8, ldpc_call_us=SeriesModel(256.0)),
        RunTruth(ue_count=4, goodput_mbps=60.0, weights=weights_for_jain(4, 0.62), du_cpu=SeriesModel(280.0),
                 cu_cpu=SeriesModel(15.0), host_pct=SeriesModel(24.0), rtf=0.5, ldpc_call_us=SeriesModel(262.0)),
    )
    return GroundTruth(StackId.OAI, runs, noise_seed=noise_seed)


def dilation_truth(seed: int) -> GroundTruth:
    """Randomized member of the time-dilation family: fair shares, falling load, RTF collapsing below 0.9."""
    rng = random.Random(f"dilation:{seed}")
    ns = sorted(rng.sample([1, 2, 3, 4, 6, 8, 12], rng.randint(2, 5)))
    a = rng.uniform(80, 140)
    b = rng.uniform(-0.95, -0.4)
    du = rng.uniform(280, 380)
    rtf_value = rng.uniform(1.2, 2.5)
    runs = []
    for i, n in enumerate(ns):
        if i:
            du *= rng.uniform(0.6, 0.85)
            rtf_value *= rng.uniform(0.3, 0.7)
        if i == len(ns) - 1:
            rtf_value = min(rtf_value, rng.uniform(0.15, 0.8))
        runs.append(RunTruth(
            ue_count=n,
            du_cpu=SeriesModel(round(du, 2), sigma_rel=0.02),
            cu_cpu=SeriesModel(round(rng.uniform(4, 25), 2), sigma_rel=0.02),
            host_pct=SeriesModel(round(rng.uniform(15, 30), 2), sigma_rel=0.02),
            rtf=max(0.05, round(rtf_value, 2)),
            ldpc_call_us=SeriesModel(round(rng.uniform(250, 280), 2)),
        ))
    return GroundTruth(StackId.OAI, tuple(runs), power_law=(a, b), noise_seed=seed)


BUILTIN_SCENARIOS = {
    "cu-du-load": cu_du_load_truths,
    "compute-bound": lambda seed=0: [compute_bound_truth(seed)],
    "unfair": lambda seed=0: [unfair_truth(seed)],
    "dilation": lambda seed=0: [dilation_truth(seed)],
}
