"""Classify a multi-N study as harness-limited, compute-bound, scheduler-unfair or indeterminate."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

from .errors import DiagnoseError
from .ingest import RunBundle, StackId, TelemetryEvent
from .kpi import KpiRow, estimate_lambda_tb

# Only ratios of lambda_TB are ever compared, so any fixed TB size works.
REFERENCE_TB_BITS = 8448.0


@dataclass(frozen=True)
class ThresholdConfig:
    fairness_floor: float = 0.99
    util_trend_tolerance: float = 0.05
    rtf_dilation_ceiling: float = 0.9
    budget_saturation_fraction: float = 0.9
    stall_window_s: float = 5.0
    t_cum_stability_band: float = 0.25

    def __post_init__(self):
        if not 0 < self.fairness_floor < 1:
            raise DiagnoseError("fairness_floor must lie in (0, 1)")
        if not 0 <= self.util_trend_tolerance < 1:
            raise DiagnoseError("util_trend_tolerance must lie in [0, 1)")
        if not self.rtf_dilation_ceiling > 0:
            raise DiagnoseError("rtf_dilation_ceiling must be positive")
        if not 0 < self.budget_saturation_fraction <= 1:
            raise DiagnoseError("budget_saturation_fraction must lie in (0, 1]")
        if not self.stall_window_s > 0:
            raise DiagnoseError("stall_window_s must be positive")
        if not self.t_cum_stability_band >= 0:
            raise DiagnoseError("t_cum_stability_band must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


class EvidenceKind(str, Enum):
    FairnessNearIdeal = "FairnessNearIdeal"
    FairnessViolation = "FairnessViolation"
    UtilizationDecreasing = "UtilizationDecreasing"
    UtilizationSaturating = "UtilizationSaturating"
    RtfDilation = "RtfDilation"
    TelemetryStall = "TelemetryStall"
    TcumStable = "TcumStable"
    LambdaCollapse = "LambdaCollapse"
    PartialData = "PartialData"


class Verdict(str, Enum):
    HarnessLimited = "HarnessLimited"
    ComputeBound = "ComputeBound"
    SchedulerUnfair = "SchedulerUnfair"
    Indeterminate = "Indeterminate"


@dataclass(frozen=True)
class Evidence:
    kind: EvidenceKind
    detail: str
    supporting_values: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if not self.supporting_values:
            raise DiagnoseError(f"{self.kind.value} evidence without supporting values")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "detail": self.detail,
            "supporting_values": [[label, value] for label, value in self.supporting_values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Evidence:
        return cls(EvidenceKind(d["kind"]), d["detail"], tuple((l, v) for l, v in d["supporting_values"]))


@dataclass(frozen=True)
class Diagnosis:
    verdict: Verdict
    evidence: tuple[Evidence, ...]
    data_quality_notes: tuple[str, ...] = ()

    @property
    def kinds(self) -> set[EvidenceKind]:
        return {e.kind for e in self.evidence}

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "evidence": [e.to_dict() for e in self.evidence],
            "data_quality_notes": list(self.data_quality_notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Diagnosis:
        return cls(
            Verdict(d["verdict"]),
            tuple(Evidence.from_dict(e) for e in d["evidence"]),
            tuple(d.get("data_quality_notes", ())),
        )


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    evidence: tuple[Evidence, ...]
    violations: tuple[str, ...]


def _is_decreasing(values: Sequence[float], tol: float) -> bool:
    """Strictly falling at every step and by more than ``tol`` overall."""
    steps_down = all(b < a for a, b in zip(values, values[1:]))
    return steps_down and values[-1] < values[0] * (1 - tol)


def _is_non_decreasing(values: Sequence[float], tol: float) -> bool:
    return all(b >= a * (1 - tol) for a, b in zip(values, values[1:]))


def utilization_consistency(
    lambda_tb: Sequence[float],
    t_cum: Sequence[float],
    util: Sequence[float],
    tol: float = 0.05,
    band: float = 0.25,
) -> ConsistencyReport:
    """Check utilization against the lambda_TB * t_cum proportionality, relative to the first point."""
    if not (len(lambda_tb) == len(t_cum) == len(util)):
        raise DiagnoseError("misaligned series for utilization consistency")
    if len(util) < 2:
        raise DiagnoseError("utilization consistency needs at least two points")
    if min(t_cum) <= 0 or min(lambda_tb) <= 0 or util[0] <= 0:
        raise DiagnoseError("utilization consistency needs positive lambda_TB, t_cum and base utilization")

    evidence = []
    spread = max(t_cum) / min(t_cum)
    if spread <= 1 + band:
        evidence.append(Evidence(
            EvidenceKind.TcumStable,
            f"per-TB cumulative decode time varies by {spread:.3f}x across N (band {1 + band:.2f}x)",
            (("t_cum_min_us", min(t_cum)), ("t_cum_max_us", max(t_cum)), ("spread", spread)),
        ))
    lam_ratio = lambda_tb[-1] / lambda_tb[0]
    if _is_decreasing(lambda_tb, tol):
        evidence.append(Evidence(
            EvidenceKind.LambdaCollapse,
            f"decoded TB rate falls to {lam_ratio:.3f} of its first value",
            (("lambda_first", lambda_tb[0]), ("lambda_last", lambda_tb[-1]), ("ratio", lam_ratio)),
        ))

    violations = []
    base = lambda_tb[0] * t_cum[0]
    for i in range(1, len(util)):
        expected = lambda_tb[i] * t_cum[i] / base
        observed = util[i] / util[0]
        if abs(observed / expected - 1) > tol:
            violations.append(
                f"point {i}: utilization ratio {observed:.4f} vs lambda*t_cum ratio {expected:.4f}"
            )
    return ConsistencyReport(not violations, tuple(evidence), tuple(violations))


def detect_telemetry_stall(
    events: Sequence[TelemetryEvent], window_s: float = 5.0, notes: list[str] | None = None
) -> Evidence | None:
    """Stall = a zero-message run of at least ``window_s`` after traffic had started."""
    notes = notes if notes is not None else []
    if not events:
        notes.append("no telemetry capture")
        return None
    events = sorted(events, key=lambda e: e.epoch_ms)
    if all(e.message_count == 0 for e in events):
        notes.append("telemetry never active")
        return None
    gaps = [b.epoch_ms - a.epoch_ms for a, b in zip(events, events[1:])]
    tick_ms = statistics.median(gaps) if gaps else 0
    window_ms = window_s * 1000
    seen_traffic = False
    run_start = None
    longest = 0.0
    stall_start = None
    for e in events:
        if e.message_count > 0:
            if run_start is not None:
                length = e.epoch_ms - run_start
                if length > longest:
                    longest, stall_start = length, run_start
                run_start = None
            seen_traffic = True
        elif seen_traffic and run_start is None:
            run_start = e.epoch_ms
    if run_start is not None:
        length = events[-1].epoch_ms - run_start + tick_ms
        if length > longest:
            longest, stall_start = length, run_start
    if longest < window_ms:
        return None
    return Evidence(
        EvidenceKind.TelemetryStall,
        f"telemetry stream silent for {longest / 1000:.1f} s after carrying traffic",
        (("stall_start_epoch_ms", float(stall_start)), ("silent_s", longest / 1000)),
    )


def _series_evidence(label: str, ns, values, kind: EvidenceKind, detail: str) -> Evidence:
    return Evidence(kind, detail, tuple((f"{label}@N={n}", v) for n, v in zip(ns, values)))


def classify(
    rows: Sequence[KpiRow],
    thresholds: ThresholdConfig | None = None,
    extra_evidence: Sequence[Evidence] = (),
) -> Diagnosis:
    """Assign one verdict by rule precedence: unfair, compute-bound, harness-limited, else indeterminate.

    Rows with N = 0 are idle baselines and take no part in the rules.
    """
    th = thresholds or ThresholdConfig()
    ns_all = [r.ue_count for r in rows]
    if ns_all != sorted(ns_all) or len(set(ns_all)) != len(ns_all):
        raise DiagnoseError(f"rows must be sorted by N without duplicates, got N={ns_all}")
    rows = [r for r in rows if r.ue_count >= 1]
    if len(rows) < 2:
        raise DiagnoseError("classification needs at least two rows with N >= 1")
    if len({r.stack_id for r in rows}) != 1:
        raise DiagnoseError("classification rows must come from one stack")

    ns = [r.ue_count for r in rows]
    evidence: list[Evidence] = []

    js = [r.jain_j for r in rows]
    known_j = [(n, j) for n, j in zip(ns, js) if j is not None]
    unfair = [(n, j) for n, j in known_j if j < th.fairness_floor]
    fair_everywhere = bool(known_j) and len(known_j) == len(rows) and not unfair
    if unfair:
        evidence.append(Evidence(
            EvidenceKind.FairnessViolation,
            f"Jain index below floor {th.fairness_floor} at N={[n for n, _ in unfair]}",
            tuple((f"J@N={n}", j) for n, j in unfair),
        ))
    elif fair_everywhere:
        evidence.append(_series_evidence(
            "J", ns, js, EvidenceKind.FairnessNearIdeal,
            f"Jain index >= {th.fairness_floor} at every N (min {min(js):.6f})",
        ))

    du = [r.du_cpu.mean for r in rows]
    tol = th.util_trend_tolerance
    du_decreasing = _is_decreasing(du, tol)
    gpu = [r.gpu_util.mean for r in rows] if all(r.gpu_util is not None for r in rows) else None
    gpu_decreasing = gpu is not None and _is_decreasing(gpu, tol)
    if du_decreasing:
        evidence.append(_series_evidence(
            "du_cpu_mean", ns, du, EvidenceKind.UtilizationDecreasing,
            f"DU CPU falls from {du[0]:.2f}% to {du[-1]:.2f}% as N grows",
        ))
    if gpu_decreasing:
        evidence.append(_series_evidence(
            "gpu_util_mean", ns, gpu, EvidenceKind.UtilizationDecreasing,
            f"GPU utilization falls from {gpu[0]:.2f}% to {gpu[-1]:.2f}% as N grows",
        ))
    utilization_decreasing = du_decreasing and (gpu is None or gpu_decreasing)

    saturating = []
    budget = rows[-1].du_core_budget_pct
    if _is_non_decreasing(du, tol) and max(du) >= th.budget_saturation_fraction * budget:
        saturating.append(("du_cpu", du, budget))
    if gpu is not None and _is_non_decreasing(gpu, tol) and max(gpu) >= th.budget_saturation_fraction * 100:
        saturating.append(("gpu_util", gpu, 100.0))
    for label, values, cap in saturating:
        evidence.append(Evidence(
            EvidenceKind.UtilizationSaturating,
            f"{label} non-decreasing in N and reaches {max(values):.2f}% of a {cap:.0f}% budget",
            tuple((f"{label}_mean@N={n}", v) for n, v in zip(ns, values)) + (("budget_pct", cap),),
        ))

    rtf_max_n = rows[-1].rtf
    dilated = rtf_max_n < th.rtf_dilation_ceiling
    if dilated:
        evidence.append(_series_evidence(
            "rtf", ns, [r.rtf for r in rows], EvidenceKind.RtfDilation,
            f"RTF {rtf_max_n:.3f} at N={ns[-1]} is below {th.rtf_dilation_ceiling} (slower than real time)",
        ))

    if all(r.ldpc_cum_us is not None for r in rows) and all(r.t_total_mbps for r in rows):
        lam = [estimate_lambda_tb(r.t_total_mbps * 1e6, REFERENCE_TB_BITS) for r in rows]
        cons = utilization_consistency(
            lam, [r.ldpc_cum_us.mean for r in rows], du, tol, th.t_cum_stability_band
        )
        evidence.extend(cons.evidence)

    partial = [(r.ue_count, r.flow_success_rate) for r in rows
               if r.flow_success_rate is not None and r.flow_success_rate < 1]
    notes: list[str] = []
    if partial:
        evidence.append(Evidence(
            EvidenceKind.PartialData,
            "incomplete flow reports; interpret affected rows conservatively",
            tuple((f"flow_success_rate@N={n}", s) for n, s in partial),
        ))
        notes.extend(
            f"N={n}: flow_success_rate={s:.3f}; utilization aggregates may be biased low" for n, s in partial
        )

    for e in extra_evidence:
        if e not in evidence:
            evidence.append(e)

    if unfair:
        verdict = Verdict.SchedulerUnfair
    elif saturating and rtf_max_n >= th.rtf_dilation_ceiling:
        verdict = Verdict.ComputeBound
    elif fair_everywhere and utilization_decreasing and dilated:
        verdict = Verdict.HarnessLimited
    else:
        verdict = Verdict.Indeterminate

    if not evidence:
        evidence.append(_series_evidence(
            "rtf", ns, [r.rtf for r in rows], EvidenceKind.PartialData,
            "fairness unavailable for some rows; RTF series recorded",
        ))

    evidence.sort(key=lambda e: (e.kind.value, e.detail))
    return Diagnosis(verdict, tuple(evidence), tuple(notes))


def data_quality_flags(bundle: RunBundle) -> list[str]:
    m = bundle.manifest
    notes = []
    n = m.ue_count
    complete = sum(1 for f in bundle.flows if f.complete)
    if n > 0 and complete < n:
        notes.append(
            f"flow_success_rate={complete / n:.3f}; utilization aggregates may be biased low "
            f"({n - complete} of {n} flows incomplete, interpret conservatively)"
        )
    for f in bundle.flows:
        if not f.complete:
            notes.append(f"UE {f.ue_id}: missing end-of-test summary; goodput estimated from intervals")
    for ue in bundle.failed_flows:
        notes.append(f"UE {ue}: report has no usable data; excluded from fairness, counted as failed")
    if m.stack_id is StackId.SRK and not bundle.has_gpu_capture:
        notes.append("accelerator stack without GPU capture; GPU utilization and energy proxy unavailable")
    if n == 0 and bundle.ldpc_records:
        notes.append("LDPC timings present with no active UEs; origin not attributable to user traffic")
    if bundle.diagnostics:
        notes.append(f"{len(bundle.diagnostics)} parse diagnostics recorded during ingestion")
    return notes


def study_evidence(bundles: Sequence[RunBundle], thresholds: ThresholdConfig | None = None) -> tuple[list[Evidence], list[str]]:
    """Telemetry and data-quality findings that come from raw artifacts rather than KPI rows."""
    th = thresholds or ThresholdConfig()
    evidence, notes = [], []
    for b in sorted(bundles, key=lambda b: b.manifest.ue_count):
        n = b.manifest.ue_count
        tel_notes: list[str] = []
        stall = detect_telemetry_stall(b.telemetry, th.stall_window_s, tel_notes)
        if stall is not None:
            evidence.append(Evidence(
                stall.kind, f"N={n}: {stall.detail}",
                ((("N", float(n)),) + stall.supporting_values),
            ))
        notes.extend(f"N={n}: {t}" for t in tel_notes)
        notes.extend(f"N={n}: {t}" for t in data_quality_flags(b))
    return evidence, notes


def diagnose_study(
    rows: Sequence[KpiRow], bundles: Sequence[RunBundle] = (), thresholds: ThresholdConfig | None = None
) -> Diagnosis:
    extra, notes = study_evidence(bundles, thresholds)
    d = classify(rows, thresholds, extra)
    # bundle-level notes carry more detail; drop row-level notes they already cover
    kept = [x for x in d.data_quality_notes if not any(b.startswith(x) for b in notes)]
    merged = kept + [x for x in notes if x not in kept]
    return Diagnosis(d.verdict, d.evidence, tuple(merged))
