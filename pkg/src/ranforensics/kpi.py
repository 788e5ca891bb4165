"""KPI computation for one run: throughput, fairness, utilization, LDPC timing, RTF."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from .errors import KpiError
from .ingest import (
    FRAMES_PER_HYPERFRAME,
    DuLogRecord,
    LdpcTiming,
    PhyConfig,
    RunBundle,
    SlotMarker,
    StackId,
    Subject,
    bundle_start_ms,
)

DEFAULT_HEAD_TRIM_S = 5.0
DEFAULT_TAIL_TRIM_S = 5.0


@dataclass(frozen=True)
class AggregateStat:
    mean: float
    p95: float
    sample_count: int

    def scaled(self, k: float) -> AggregateStat:
        return AggregateStat(self.mean * k, self.p95 * k, self.sample_count)


@dataclass(frozen=True)
class SteadyStateWindow:
    start_epoch_ms: int
    end_epoch_ms: int

    def __post_init__(self):
        if self.start_epoch_ms >= self.end_epoch_ms:
            raise KpiError(f"empty steady-state window [{self.start_epoch_ms}, {self.end_epoch_ms}]")

    def contains(self, epoch_ms: int) -> bool:
        return self.start_epoch_ms <= epoch_ms <= self.end_epoch_ms

    @property
    def seconds(self) -> float:
        return (self.end_epoch_ms - self.start_epoch_ms) / 1000.0


@dataclass(frozen=True)
class KpiRow:
    stack_id: StackId
    ue_count: int
    t_total_mbps: float | None
    t_per_ue_mbps: float | None
    jain_j: float | None
    du_cpu: AggregateStat
    cu_cpu: AggregateStat
    sys_cpu: AggregateStat
    ldpc_per_call_us: AggregateStat | None
    ldpc_cum_us: AggregateStat | None
    gpu_util: AggregateStat | None
    gpu_power_w: AggregateStat | None
    rtf: float
    flow_success_rate: float | None
    # supporting fields beyond the core KPI columns
    du_core_budget_pct: float = 400.0
    ldpc_segments_per_call: AggregateStat | None = None
    estimated_flows: int = 0
    failed_flows: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stack_id"] = self.stack_id.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> KpiRow:
        d = dict(d)
        d["stack_id"] = StackId(d["stack_id"])
        for key in ("du_cpu", "cu_cpu", "sys_cpu", "ldpc_per_call_us", "ldpc_cum_us",
                    "gpu_util", "gpu_power_w", "ldpc_segments_per_call"):
            if d.get(key) is not None:
                d[key] = AggregateStat(**d[key])
        return cls(**d)


def steady_window(
    bundle: RunBundle, head_trim_s: float = DEFAULT_HEAD_TRIM_S, tail_trim_s: float = DEFAULT_TAIL_TRIM_S
) -> SteadyStateWindow:
    duration = bundle.manifest.run_duration_s
    if head_trim_s < 0 or tail_trim_s < 0:
        raise KpiError("trims must be non-negative")
    if duration <= head_trim_s + tail_trim_s:
        raise KpiError(f"trims {head_trim_s}+{tail_trim_s} s exceed run duration {duration} s")
    start = bundle_start_ms(bundle)
    return SteadyStateWindow(
        start + round(head_trim_s * 1000), start + round((duration - tail_trim_s) * 1000)
    )


def aggregate(series: Iterable[float]) -> AggregateStat:
    """Arithmetic mean and nearest-rank p95 (rank = ceil(0.95 n), no interpolation)."""
    values = sorted(series)
    n = len(values)
    if n == 0:
        raise KpiError("no samples in steady-state window")
    rank = (95 * n + 99) // 100  # integer ceil(0.95 n)
    return AggregateStat(math.fsum(values) / n, values[rank - 1], n)


def jain_fairness(per_ue_goodputs: Sequence[float]) -> float:
    xs = list(per_ue_goodputs)
    if not xs:
        raise KpiError("jain fairness needs at least one flow")
    if any(x < 0 for x in xs):
        raise KpiError("negative goodput in fairness input")
    sq = math.fsum(x * x for x in xs)
    if sq == 0:
        raise KpiError("no delivered traffic")
    total = math.fsum(xs)
    j = total * total / (len(xs) * sq)
    return min(j, 1.0)


def raw_ul_bound(phy: PhyConfig) -> int:
    """Raw uplink payload bound in bit/s, before DMRS, coding and stack overhead."""
    return phy.n_prb * phy.n_sc * phy.n_sym * phy.f_slot * phy.q_m


def efficiency(t1_bps: float, r_raw_bps: float) -> float:
    if r_raw_bps <= 0:
        raise KpiError("raw bound must be positive")
    return t1_bps / r_raw_bps


def slots_advanced(markers: Sequence[SlotMarker], slots_per_frame: int) -> int:
    """Total slots between the first and last marker, unwrapping the 1024-frame counter.

    Consecutive markers must be less than one hyperframe apart.
    """
    period = FRAMES_PER_HYPERFRAME * slots_per_frame
    total = 0
    prev = None
    for m in markers:
        pos = m.frame * slots_per_frame + m.slot
        if prev is not None:
            total += (pos - prev) % period
        prev = pos
    return total


def rtf(slot_markers: Sequence[DuLogRecord], phy: PhyConfig, window: SteadyStateWindow | None = None) -> float:
    """Observed slot-processing rate over the nominal ``f_slot``.

    The rate is measured across the wall-clock span between the first and
    last marker inside the window.
    """
    marks = [r for r in slot_markers if isinstance(r.payload, SlotMarker)]
    if window is not None:
        marks = [r for r in marks if window.contains(r.epoch_ms)]
    if len(marks) < 2:
        raise KpiError("insufficient slot markers")
    span_s = (marks[-1].epoch_ms - marks[0].epoch_ms) / 1000.0
    if span_s <= 0:
        raise KpiError("insufficient slot markers: zero wall-clock span")
    slots = slots_advanced([r.payload for r in marks], phy.slots_per_frame)
    return slots / span_s / phy.f_slot


def ldpc_cumulative(per_call_us: float, n_threads: int) -> float:
    if per_call_us < 0 or n_threads < 1:
        raise KpiError("ldpc_cumulative needs per_call_us >= 0 and n_threads >= 1")
    return n_threads * per_call_us


def energy_proxy(gpu_power_w: float, goodput_mbps: float) -> float:
    """GPU watts spent per delivered Mb/s."""
    if goodput_mbps <= 0:
        raise KpiError("energy proxy undefined at zero goodput")
    return gpu_power_w / goodput_mbps


def sys_cpu_core_equiv(host_pct: float, host_core_count: int) -> float:
    if host_core_count < 1:
        raise KpiError("host_core_count must be >= 1")
    return host_pct * host_core_count


def estimate_lambda_tb(goodput_bps: float, tb_bits: float) -> float:
    """Decoded transport blocks per wall-second, as a goodput / TB-size proxy."""
    if tb_bits <= 0:
        raise KpiError("tb_bits must be positive")
    return goodput_bps / tb_bits


def _field(name: str, fn, *args):
    try:
        return fn(*args)
    except KpiError as exc:
        raise KpiError(f"{name}: {exc}") from None


def build_kpi_row(bundle: RunBundle, window: SteadyStateWindow) -> KpiRow:
    m = bundle.manifest
    n = m.ue_count

    def window_values(subject: Subject, attr: str) -> list[float]:
        return [
            getattr(s, attr)
            for s in bundle.samples_for(subject)
            if window.contains(s.epoch_ms) and getattr(s, attr) is not None
        ]

    du_cpu = _field("du_cpu", aggregate, window_values(Subject.DU, "cpu_core_equiv_pct"))
    cu_cpu = _field("cu_cpu", aggregate, window_values(Subject.CU, "cpu_core_equiv_pct"))
    host = [sys_cpu_core_equiv(v, m.host_core_count) for v in window_values(Subject.HOST, "cpu_core_equiv_pct")]
    sys_cpu = _field("sys_cpu", aggregate, host)

    gpu_util = gpu_power = None
    if bundle.samples_for(Subject.GPU):
        util = window_values(Subject.GPU, "gpu_util_pct")
        power = window_values(Subject.GPU, "gpu_power_w")
        gpu_util = _field("gpu_util", aggregate, util) if util else None
        gpu_power = _field("gpu_power_w", aggregate, power) if power else None
        if gpu_util is None and gpu_power is None:
            raise KpiError("gpu: no samples in steady-state window")

    ldpc = [r.payload for r in bundle.ldpc_records if window.contains(r.epoch_ms)]
    ldpc_call = ldpc_cum = segs = None
    if ldpc:
        ldpc_call = aggregate(t.avg_call_us for t in ldpc)
        ldpc_cum = aggregate(ldpc_cumulative(t.avg_call_us, m.phy.n_ldpc_threads) for t in ldpc)
        seg_values = [t.segments_per_call for t in ldpc if t.per_seg_us > 0]
        segs = aggregate(seg_values) if seg_values else None

    rtf_value = _field("rtf", rtf, bundle.slot_records, m.phy, window)

    t_total = t_per_ue = jain = success = None
    if n > 0:
        goodputs = [f.goodput_bps for f in bundle.flows]
        t_total = math.fsum(goodputs) / 1e6
        t_per_ue = t_total / n
        jain = _field("jain_j", jain_fairness, goodputs)
        success = sum(1 for f in bundle.flows if f.complete) / n

    return KpiRow(
        stack_id=m.stack_id,
        ue_count=n,
        t_total_mbps=t_total,
        t_per_ue_mbps=t_per_ue,
        jain_j=jain,
        du_cpu=du_cpu,
        cu_cpu=cu_cpu,
        sys_cpu=sys_cpu,
        ldpc_per_call_us=ldpc_call,
        ldpc_cum_us=ldpc_cum,
        gpu_util=gpu_util,
        gpu_power_w=gpu_power,
        rtf=rtf_value,
        flow_success_rate=success,
        du_core_budget_pct=100.0 * len(m.du_cores),
        ldpc_segments_per_call=segs,
        estimated_flows=sum(1 for f in bundle.flows if not f.complete),
        failed_flows=len(bundle.failed_flows),
    )
