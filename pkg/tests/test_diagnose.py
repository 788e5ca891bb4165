import pytest
from hypothesis import given, settings, strategies as st

from ranforensics import synth
from ranforensics.diagnose import (
    Diagnosis, EvidenceKind, ThresholdConfig, Verdict, classify, data_quality_flags,
    detect_telemetry_stall, utilization_consistency,
)
from ranforensics.errors import DiagnoseError
from ranforensics.ingest import StackId, TelemetryEvent, load_run_bundle
from ranforensics.kpi import AggregateStat, KpiRow


def stat(v):
    return AggregateStat(v, v, 100)


def row(n, t, j, du, rtf, *, ldpc=None, gpu=None, success=1.0, stack=StackId.OAI):
    return KpiRow(
        stack_id=stack, ue_count=n, t_total_mbps=t, t_per_ue_mbps=t / n if n else None, jain_j=j,
        du_cpu=stat(du), cu_cpu=stat(10.0), sys_cpu=stat(400.0),
        ldpc_per_call_us=stat(ldpc) if ldpc else None, ldpc_cum_us=stat(4 * ldpc) if ldpc else None,
        gpu_util=stat(gpu) if gpu is not None else None, gpu_power_w=None, rtf=rtf, flow_success_rate=success,
    )


OAI_LOAD_ROWS = [
    row(1, 114.59, 1.0, 324.79, 1.84, ldpc=255.86),
    row(3, 65.21, 0.999997, 289.93, 1.05, ldpc=262.60),
    row(6, 35.09, 0.999484, 205.54, 0.55, ldpc=275.27),
    row(12, 16.35, 0.999997, 162.38, 0.28, ldpc=273.18),
]


def test_oai_load_rows_are_harness_limited():
    d = classify(OAI_LOAD_ROWS)
    assert d.verdict is Verdict.HarnessLimited
    assert {EvidenceKind.FairnessNearIdeal, EvidenceKind.UtilizationDecreasing, EvidenceKind.RtfDilation,
            EvidenceKind.TcumStable, EvidenceKind.LambdaCollapse} <= d.kinds


def test_compute_bound_rows():
    rows = [row(1, 100, 1.0, 250, 1.0), row(3, 140, 1.0, 390, 1.0), row(6, 145, 1.0, 398, 1.0)]
    d = classify(rows)
    assert d.verdict is Verdict.ComputeBound
    assert EvidenceKind.UtilizationSaturating in d.kinds


def test_unfair_rows():
    d = classify([row(1, 100, 1.0, 300, 1.5), row(4, 60, 0.62, 280, 0.5)])
    assert d.verdict is Verdict.SchedulerUnfair
    assert EvidenceKind.FairnessViolation in d.kinds


def test_unfairness_outranks_saturation():
    rows = [row(1, 100, 1.0, 250, 1.0), row(3, 140, 0.5, 390, 1.0), row(6, 145, 1.0, 398, 1.0)]
    assert classify(rows).verdict is Verdict.SchedulerUnfair


def test_indeterminate_when_real_time_and_not_saturated():
    rows = [row(1, 100, 1.0, 300, 1.0), row(3, 90, 1.0, 200, 1.0)]
    assert classify(rows).verdict is Verdict.Indeterminate


def test_idle_rows_are_ignored():
    idle = row(0, None, None, 210, 3.2)
    idle = KpiRow(**{**idle.__dict__, "t_per_ue_mbps": None, "flow_success_rate": None})
    assert classify([idle, *OAI_LOAD_ROWS]).verdict is Verdict.HarnessLimited


@pytest.mark.parametrize("rows", [
    [OAI_LOAD_ROWS[0]],
    [OAI_LOAD_ROWS[1], OAI_LOAD_ROWS[0]],
    [OAI_LOAD_ROWS[0], OAI_LOAD_ROWS[0]],
    [OAI_LOAD_ROWS[0], row(3, 60, 1.0, 200, 0.5, stack=StackId.SRK)],
])
def test_classify_rejects_bad_input(rows):
    with pytest.raises(DiagnoseError):
        classify(rows)


def test_partial_data_note():
    rows = [row(1, 100, 1.0, 300, 1.7), row(12, 16, 0.99999, 170, 0.28, success=10 / 12)]
    d = classify(rows)
    assert EvidenceKind.PartialData in d.kinds
    assert any("flow_success_rate=0.833; utilization aggregates may be biased low" in n for n in d.data_quality_notes)


def test_thresholds_change_outcome():
    rows = [row(1, 100, 1.0, 300, 1.0), row(3, 70, 1.0, 250, 0.85)]
    assert classify(rows).verdict is Verdict.HarnessLimited
    assert classify(rows, ThresholdConfig(rtf_dilation_ceiling=0.8)).verdict is Verdict.Indeterminate


def test_threshold_validation():
    with pytest.raises(DiagnoseError):
        ThresholdConfig(fairness_floor=1.5)


def test_consistency_examples():
    ok = utilization_consistency([100, 50, 25], [1.0, 1.0, 1.0], [80, 40, 20])
    assert ok.consistent
    bad = utilization_consistency([100, 100], [1.0, 1.0], [40, 80])
    assert not bad.consistent and bad.violations


def test_consistency_on_reference_oai_series():
    lam = [t * 1e6 / 8448 for t in (114.59, 65.21, 35.09, 16.35)]
    tcum = [1023.44, 1050.40, 1101.08, 1092.72]
    rep = utilization_consistency(lam, tcum, [324.79, 289.93, 205.54, 162.38])
    kinds = {e.kind for e in rep.evidence}
    assert kinds == {EvidenceKind.TcumStable, EvidenceKind.LambdaCollapse}
    # DU CPU falls far less than lambda*t_cum: the harness, not decoding, sets the pace
    assert not rep.consistent


def _tel(counts, tick_ms=1000):
    return [TelemetryEvent(i * tick_ms, c) for i, c in enumerate(counts)]


def test_stall_detection_examples():
    e = detect_telemetry_stall(_tel([100] * 30 + [0] * 30))
    assert e is not None and e.kind is EvidenceKind.TelemetryStall
    assert dict(e.supporting_values)["silent_s"] == 30
    assert detect_telemetry_stall(_tel([100] * 60)) is None
    notes = []
    assert detect_telemetry_stall(_tel([0] * 60), notes=notes) is None
    assert notes == ["telemetry never active"]


def test_short_gap_is_not_a_stall():
    assert detect_telemetry_stall(_tel([100] * 10 + [0] * 3 + [100] * 10), window_s=5) is None


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 50), st.integers(0, 50), st.integers(1, 20))
def test_stall_fires_iff_gap_reaches_window(active, silent, window):
    e = detect_telemetry_stall(_tel([10] * active + [0] * silent), window_s=window)
    assert (e is not None) == (silent >= window)


def test_data_quality_flags(cu_du_bundles):
    srk12 = next(b for b in cu_du_bundles if b.manifest.stack_id is StackId.SRK and b.manifest.ue_count == 12)
    notes = data_quality_flags(srk12)
    assert any(n.startswith("flow_success_rate=0.833; utilization aggregates may be biased low") for n in notes)
    oai3 = next(b for b in cu_du_bundles if b.manifest.stack_id is StackId.OAI and b.manifest.ue_count == 3)
    assert data_quality_flags(oai3) == []


def test_srk_without_gpu_capture_flagged(tmp_path):
    srk = synth.cu_du_load_truths()[1]
    manifest = synth.generate_bundle_files(srk, 3, tmp_path)
    (tmp_path / "gpu_samples.csv").unlink()
    b = load_run_bundle(manifest)
    assert any("GPU capture" in n for n in data_quality_flags(b))


def test_diagnosis_dict_round_trip():
    d = classify(OAI_LOAD_ROWS)
    assert Diagnosis.from_dict(d.to_dict()) == d
