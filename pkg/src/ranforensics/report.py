"""Study assembly and rendering: KPI table, derived constants, fits, diagnoses."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .diagnose import Diagnosis, ThresholdConfig, diagnose_study
from .errors import DiagnoseError, ReportError
from .fit import PowerLawFit, ScalingPoint, collapse_ratio, fit_power_law, predict
from .ingest import PhyConfig, RunBundle, StackId
from .kpi import (
    DEFAULT_HEAD_TRIM_S,
    DEFAULT_TAIL_TRIM_S,
    AggregateStat,
    KpiRow,
    build_kpi_row,
    efficiency,
    energy_proxy,
    raw_ul_bound,
    steady_window,
)

FORMATS = ("text", "json", "csv-plot")
PLOT_SAMPLES = 25


@dataclass
class StudyReport:
    kpi_rows: dict[str, list[KpiRow]]
    fits: dict[str, PowerLawFit] = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    diagnoses: dict[str, Diagnosis] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        for stack, rows in self.kpi_rows.items():
            active = [r for r in rows if r.ue_count >= 1]
            if len(active) >= 2 and stack not in self.diagnoses:
                raise ReportError(f"stack {stack} has {len(active)} active rows but no diagnosis")

    @property
    def stacks(self) -> list[str]:
        order = [s.value for s in StackId]
        return sorted(self.kpi_rows, key=lambda s: (order.index(s) if s in order else len(order), s))

    def to_dict(self) -> dict:
        return {
            "kpi_rows": {s: [r.to_dict() for r in rows] for s, rows in self.kpi_rows.items()},
            "fits": {s: f.to_dict() for s, f in self.fits.items()},
            "derived": self.derived,
            "diagnoses": {s: d.to_dict() for s, d in self.diagnoses.items()},
            "notes": list(self.notes),
            "settings": self.settings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> StudyReport:
        try:
            return cls(
                kpi_rows={s: [KpiRow.from_dict(r) for r in rows] for s, rows in d["kpi_rows"].items()},
                fits={s: PowerLawFit(**f) for s, f in d.get("fits", {}).items()},
                derived=d.get("derived", {}),
                diagnoses={s: Diagnosis.from_dict(x) for s, x in d.get("diagnoses", {}).items()},
                notes=list(d.get("notes", [])),
                settings=d.get("settings", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ReportError(f"malformed report document: {exc}") from None


def scaling_points(rows: Sequence[KpiRow]) -> list[ScalingPoint]:
    return [ScalingPoint(r.ue_count, r.t_total_mbps) for r in rows if r.ue_count >= 1 and r.t_total_mbps]


def derive_constants(rows_by_stack: dict[str, list[KpiRow]], phy: PhyConfig | None) -> dict:
    derived: dict = {"eta": {}, "collapse": {}, "energy_proxy_w_per_mbps": {}}
    if phy is not None:
        derived["phy"] = {k: v for k, v in asdict(phy).items() if k != "n_ldpc_threads"}
        derived["r_raw_bps"] = raw_ul_bound(phy)
    for stack, rows in rows_by_stack.items():
        active = [r for r in rows if r.ue_count >= 1 and r.t_total_mbps]
        if not active:
            continue
        first, last = active[0], active[-1]
        if phy is not None and first.ue_count == 1:
            derived["eta"][stack] = efficiency(first.t_total_mbps * 1e6, derived["r_raw_bps"])
        if len(active) >= 2:
            derived["collapse"][stack] = {
                "from_n": first.ue_count, "to_n": last.ue_count,
                "ratio": collapse_ratio(first.t_total_mbps, last.t_total_mbps),
            }
        proxies = {}
        for r in (first, last):
            if r.gpu_power_w is not None:
                proxies[f"N={r.ue_count}"] = energy_proxy(r.gpu_power_w.mean, r.t_total_mbps)
        if proxies:
            derived["energy_proxy_w_per_mbps"][stack] = proxies
    return derived


def assemble_report(
    rows_by_stack: dict[str, list[KpiRow]],
    phy: PhyConfig | None = None,
    diagnoses: dict[str, Diagnosis] | None = None,
    thresholds: ThresholdConfig | None = None,
    notes: Sequence[str] = (),
    settings: dict | None = None,
) -> StudyReport:
    th = thresholds or ThresholdConfig()
    diagnoses = dict(diagnoses or {})
    fits = {}
    all_notes = list(notes)
    for stack, rows in rows_by_stack.items():
        pts = scaling_points(rows)
        if len({p.n for p in pts}) >= 2:
            fits[stack] = fit_power_law(pts)
        if stack not in diagnoses and sum(1 for r in rows if r.ue_count >= 1) >= 2:
            diagnoses[stack] = diagnose_study(rows, (), th)
    settings = dict(settings or {})
    settings.setdefault("thresholds", th.to_dict())
    settings.setdefault("p95_method", "nearest-rank, rank = ceil(0.95 n)")
    return StudyReport(rows_by_stack, fits, derive_constants(rows_by_stack, phy), diagnoses, all_notes, settings)


def analyze_bundles(
    bundles: Sequence[RunBundle],
    head_trim_s: float = DEFAULT_HEAD_TRIM_S,
    tail_trim_s: float = DEFAULT_TAIL_TRIM_S,
    thresholds: ThresholdConfig | None = None,
) -> StudyReport:
    """KPI rows, fits, derived constants and a diagnosis for every stack in the study."""
    th = thresholds or ThresholdConfig()
    seen = set()
    by_stack: dict[str, list[RunBundle]] = {}
    for b in bundles:
        key = (b.manifest.stack_id, b.manifest.ue_count)
        if key in seen:
            raise ReportError(f"duplicate run {key[0].value} N={key[1]} in study")
        seen.add(key)
        by_stack.setdefault(b.manifest.stack_id.value, []).append(b)

    rows_by_stack: dict[str, list[KpiRow]] = {}
    diagnoses: dict[str, Diagnosis] = {}
    notes: list[str] = []
    phy = None
    for stack, group in by_stack.items():
        group.sort(key=lambda b: b.manifest.ue_count)
        rows = []
        for b in group:
            window = steady_window(b, head_trim_s, tail_trim_s)
            rows.append(build_kpi_row(b, window))
        rows_by_stack[stack] = rows
        phy = phy or group[0].manifest.phy
        try:
            diagnoses[stack] = diagnose_study(rows, group, th)
        except DiagnoseError as exc:
            notes.append(f"{stack}: no diagnosis ({exc})")
    phys = {b.manifest.phy for b in bundles}
    if len({(p.n_prb, p.n_sc, p.n_sym, p.f_slot, p.q_m) for p in phys}) > 1:
        notes.append("stacks use different PHY configurations; raw bound reported for the first")
    settings = {"head_trim_s": head_trim_s, "tail_trim_s": tail_trim_s}
    return assemble_report(rows_by_stack, phy, diagnoses, th, notes, settings)


# ---------------------------------------------------------------- rendering

def _num(v: float | None, digits: int = 2) -> str:
    return "NA" if v is None else f"{v:.{digits}f}"


def _stat(s: AggregateStat | None) -> str:
    return "NA" if s is None else f"{s.mean:.2f}/{s.p95:.2f}"


_COLUMNS = [
    ("T_total (Mbps)", lambda r: _num(r.t_total_mbps)),
    ("T_per-UE (Mbps)", lambda r: _num(r.t_per_ue_mbps)),
    ("Jain J", lambda r: _num(r.jain_j, 6)),
    ("DU CPU (%)", lambda r: _stat(r.du_cpu)),
    ("CU CPU (%)", lambda r: _stat(r.cu_cpu)),
    ("SYS CPU (%)", lambda r: _stat(r.sys_cpu)),
    ("LDPC/thread (us)", lambda r: _stat(r.ldpc_per_call_us)),
    ("LDPC cum (us)", lambda r: _stat(r.ldpc_cum_us)),
    ("GPU util (%)", lambda r: _stat(r.gpu_util)),
    ("GPU power (W)", lambda r: _stat(r.gpu_power_w)),
    ("RTF", lambda r: _num(r.rtf)),
    ("Flow success", lambda r: _num(r.flow_success_rate, 3)),
]
_GPU_COLUMNS = {"GPU util (%)", "GPU power (W)"}


def _aligned(table: list[list[str]]) -> list[str]:
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    return ["  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip() for row in table]


def render_kpi_table(report: StudyReport) -> str:
    stacks = report.stacks
    ns = sorted({r.ue_count for rows in report.kpi_rows.values() for r in rows})
    by_key = {(s, r.ue_count): r for s in stacks for r in report.kpi_rows[s]}
    header1, header2, spec = ["N"], [""], []
    for title, fn in _COLUMNS:
        cols = stacks
        if title in _GPU_COLUMNS:
            cols = [s for s in stacks if any(r.gpu_util or r.gpu_power_w for r in report.kpi_rows[s])]
        for i, s in enumerate(cols):
            header1.append(title if i == 0 else "")
            header2.append(s)
            spec.append((s, fn))
    body = []
    for n in ns:
        row = [str(n)]
        for s, fn in spec:
            r = by_key.get((s, n))
            row.append("-" if r is None else fn(r))
        body.append(row)
    return "\n".join(_aligned([header1, header2] + body))


def render_derived(report: StudyReport) -> str:
    d = report.derived
    lines = []
    phy = d.get("phy")
    if phy:
        lines += [
            f"Configured PRBs            N_PRB = {phy['n_prb']}",
            f"Subcarriers/PRB            N_sc = {phy['n_sc']}",
            f"Symbols/slot               N_sym = {phy['n_sym']}",
            f"Slot rate                  f_slot = {phy['f_slot']} slots/s",
            f"Modulation order           Q_m = {phy['q_m']}",
            f"Raw UL payload bound       R_raw = {d['r_raw_bps'] / 1e6:.2f} Mbps",
        ]
    for s in report.stacks:
        row1 = next((r for r in report.kpi_rows[s] if r.ue_count == 1), None)
        if s in d.get("eta", {}) and row1 is not None:
            lines.append(f"Single-UE goodput {s:<8} {row1.t_total_mbps:.2f} Mbps (eta = {d['eta'][s]:.2f})")
    for s in report.stacks:
        if s in report.fits:
            f = report.fits[s]
            lines.append(f"Log-fit power law {s:<8} T(N) = {f.a:.2f} * N^{f.b:.4f}  (R2_log = {f.r2_log:.4f})")
    for s in report.stacks:
        c = d.get("collapse", {}).get(s)
        if c:
            lines.append(f"Collapse {s:<17} {c['ratio']:.2f}x (N={c['from_n']} -> N={c['to_n']})")
    for s in report.stacks:
        e = d.get("energy_proxy_w_per_mbps", {}).get(s)
        if e:
            parts = ", ".join(f"{k}: {v:.2f} W/Mbps" for k, v in e.items())
            lines.append(f"GPU energy proxy {s:<9} {parts}")
    return "\n".join(lines)


def _support_value(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.6g}"


def render_text(report: StudyReport) -> str:
    out = ["KPI TABLE (mean/p95 over steady-state samples; CPU in core-equivalent %)", "",
           render_kpi_table(report), "", "DERIVED CONSTANTS AND FITS", "", render_derived(report), ""]
    support = []
    for s in report.stacks:
        for r in report.kpi_rows[s]:
            support.append(
                f"{s} N={r.ue_count}: DU budget {r.du_core_budget_pct:.0f}%, "
                f"LDPC segments/call {_stat(r.ldpc_segments_per_call)}, "
                f"estimated flows {r.estimated_flows}, failed flows {r.failed_flows}"
            )
    out += ["SUPPORTING VALUES", ""] + support + [""]
    out += ["DIAGNOSES", ""]
    for s in report.stacks:
        d = report.diagnoses.get(s)
        if d is None:
            out.append(f"{s}: no diagnosis")
            continue
        out.append(f"{s}: {d.verdict.value}")
        for e in d.evidence:
            values = ", ".join(f"{label}={_support_value(value)}" for label, value in e.supporting_values)
            out.append(f"  [{e.kind.value}] {e.detail} ({values})")
        for note in d.data_quality_notes:
            out.append(f"  note: {note}")
    out.append("")
    out.append("SETTINGS")
    out.append("")
    for key, value in sorted(report.settings.items()):
        if isinstance(value, dict):
            for k2, v2 in sorted(value.items()):
                out.append(f"{key}.{k2} = {v2}")
        else:
            out.append(f"{key} = {value}")
    if report.notes:
        out += ["", "NOTES", ""] + [f"- {n}" for n in report.notes]
    return "\n".join(out) + "\n"


def render_json(report: StudyReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_plot_csv(report: StudyReport, stack: str) -> str:
    """Measured points with the fitted curve at those N, then a log-spaced curve for overlays."""
    rows = [r for r in report.kpi_rows[stack] if r.ue_count >= 1 and r.t_total_mbps]
    fit = report.fits.get(stack)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "t_measured", "t_fitted"])
    for r in rows:
        w.writerow([r.ue_count, repr(r.t_total_mbps), repr(predict(fit, r.ue_count)) if fit else ""])
    if fit and rows:
        lo, hi = math.log(rows[0].ue_count), math.log(rows[-1].ue_count)
        for i in range(PLOT_SAMPLES):
            n = math.exp(lo + (hi - lo) * i / (PLOT_SAMPLES - 1))
            w.writerow([repr(n), "", repr(predict(fit, n))])
    return out.getvalue()


def render_report(report: StudyReport, fmt: str) -> dict[str, str]:
    """Map of output filename to document for one format."""
    if fmt == "text":
        return {"report.txt": render_text(report)}
    if fmt == "json":
        return {"report.json": render_json(report)}
    if fmt == "csv-plot":
        return {f"plot_{s.lower()}.csv": render_plot_csv(report, s) for s in report.stacks}
    raise ReportError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def write_report(report: StudyReport, out_dir: Path | str, formats: Sequence[str] = FORMATS) -> list[Path]:
    out = Path(out_dir)
    docs = {}
    for fmt in formats:
        docs.update(render_report(report, fmt))
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in docs.items():
            path = out / name
            path.write_text(text)
            written.append(path)
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from None
    return written


def load_report(path: Path | str) -> StudyReport:
    try:
        return StudyReport.from_dict(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        raise ReportError(f"report not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"report {path} is not valid JSON: {exc}") from None
