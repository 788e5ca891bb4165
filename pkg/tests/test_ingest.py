import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from ranforensics import synth
from ranforensics.errors import EmptyFlowReport, FlowReportError, IngestError
from ranforensics.ingest import (
    LdpcTiming, Other, SlotMarker, StackId, Subject, load_run_bundle, parse_core_set,
    parse_du_log, parse_flow_report, parse_manifest, parse_resource_samples,
    parse_telemetry_capture, render_manifest,
)

LDPC_LINE = "1772062027043 oai-nr-du 532641.987492 [NR_PHY] I CPU LDPC decoder:   235.07 us (  59.18 us / seg)"
SLOT_LINE = "1772062030875 oai-nr-du 532645.818719 [NR_MAC] I Frame.Slot 768.0"


def test_ldpc_line_parses_exactly():
    (rec,) = parse_du_log([LDPC_LINE])
    assert rec.epoch_ms == 1772062027043
    assert rec.source_tag == "oai-nr-du"
    assert rec.stack_clock_s == 532641.987492
    assert rec.payload == LdpcTiming(avg_call_us=235.07, per_seg_us=59.18)


def test_slot_line_parses_exactly():
    (rec,) = parse_du_log([SLOT_LINE])
    assert rec.epoch_ms == 1772062030875
    assert rec.payload == SlotMarker(frame=768, slot=0)


def test_other_subsystem_falls_through():
    line = "1772062030880 oai-nr-du 532645.9 [GTPU] I tunnel created"
    (rec,) = parse_du_log([line])
    assert isinstance(rec.payload, Other)
    assert rec.payload.raw == line


def test_bad_epoch_goes_to_diagnostics():
    diag = []
    recs = parse_du_log(["abc oai-nr-du 1.0 [NR_MAC] I Frame.Slot 1.0", SLOT_LINE], diag)
    assert len(recs) == 1 and len(diag) == 1


def test_gpu_ldpc_label_accepted():
    line = "1772062027043 srk-du 1.5 [NR_PHY] I CUDA LDPC decoder: 316.02 us ( 79.01 us / seg)"
    (rec,) = parse_du_log([line])
    assert rec.payload == LdpcTiming(316.02, 79.01)


def test_order_preserved_for_equal_timestamps():
    lines = [f"100 du {i}.0 [GTPU] I line {i}" for i in range(5)]
    recs = parse_du_log(lines)
    assert [r.stack_clock_s for r in recs] == [0.0, 1.0, 2.0, 3.0, 4.0]


_float_tok = st.decimals(min_value=0, max_value=99999, places=2).map(str)


@st.composite
def grammar_line(draw):
    epoch = draw(st.integers(0, 10**13))
    clock = draw(st.decimals(min_value=0, max_value=10**6, places=6)).__str__()
    kind = draw(st.sampled_from(["ldpc", "slot", "other"]))
    pad = " " * draw(st.integers(0, 3))
    if kind == "ldpc":
        seg = draw(st.floats(0, 1000, allow_nan=False)).__round__(2)
        call = seg * draw(st.integers(1, 8))
        body = f"[NR_PHY] I CPU LDPC decoder:{pad}{call:.2f} us ({pad}{seg:.2f} us / seg)"
    elif kind == "slot":
        body = f"[NR_MAC] I Frame.Slot {draw(st.integers(0, 1023))}.{draw(st.integers(0, 19))}"
    else:
        body = f"[{draw(st.sampled_from(['GTPU', 'RRC', 'NR_PHY', 'HW']))}] I {draw(st.text('abc xyz:.0123', max_size=30))}"
    return kind, f"{epoch} oai-nr-du {clock} {body}"


@settings(max_examples=300, deadline=None)
@given(st.lists(grammar_line(), min_size=1, max_size=40))
def test_grammar_lines_never_hard_fail(lines):
    diag = []
    recs = parse_du_log([line for _, line in lines], diag)
    assert len(recs) == len(lines)
    assert diag == []
    for (kind, _), rec in zip(lines, recs):
        if kind == "ldpc":
            assert isinstance(rec.payload, LdpcTiming)
        elif kind == "slot":
            assert isinstance(rec.payload, SlotMarker)


def test_flow_report_complete():
    doc = json.dumps({"end": {"sum_received": {"bits_per_second": 114.59e6, "bytes": 859425000, "seconds": 60.0}},
                      "intervals": []})
    f = parse_flow_report(doc, "ue1")
    assert f.complete and f.goodput_bps == 114.59e6


def test_flow_report_intervals_only():
    # 60 Mbit over 30 covered seconds: 2 Mb/s by hand
    intervals = [{"sum": {"seconds": 1.0, "bytes": 250000}} for _ in range(30)]
    f = parse_flow_report(json.dumps({"intervals": intervals}), "ue2")
    assert not f.complete
    assert f.goodput_bps == pytest.approx(2.0e6, rel=1e-12)


@pytest.mark.parametrize("doc", ["", "   ", "{not json"])
def test_flow_report_unparseable(doc):
    with pytest.raises(FlowReportError, match="unparseable flow report"):
        parse_flow_report(doc, "ue3")


def test_flow_report_without_summary_or_intervals():
    with pytest.raises(EmptyFlowReport):
        parse_flow_report(json.dumps({"end": {}, "intervals": []}), "ue4")


def test_resource_samples_examples():
    (du,) = parse_resource_samples("1772062027043,du,324.79\n", "cpu")
    assert du.subject is Subject.DU and du.cpu_core_equiv_pct == 324.79
    (gpu,) = parse_resource_samples("1772062027043,gpu,44.85,38.48\n", "gpu")
    assert gpu.subject is Subject.GPU and gpu.gpu_util_pct == 44.85 and gpu.gpu_power_w == 38.48


def test_resource_samples_empty_warns():
    diag = []
    assert parse_resource_samples("", "cpu", diag) == []
    assert diag


def test_resource_samples_header_mismatch_names_columns():
    with pytest.raises(IngestError, match="epoch_ms"):
        parse_resource_samples("time,who,value\n1,du,2\n", "cpu")


def test_telemetry_examples():
    events = parse_telemetry_capture("".join(f"{1000 + i},100\n" for i in range(60)))
    assert len(events) == 60
    assert sum(e.message_count for e in events) / 60 == 100
    assert all(e.message_count == 0 for e in parse_telemetry_capture("1,0\n2,0\n"))
    with pytest.raises(IngestError):
        parse_telemetry_capture("1,-3\n")


def test_core_sets():
    assert parse_core_set("8-11") == {8, 9, 10, 11}
    assert parse_core_set("6,7") == {6, 7}


def test_bundle_oai_n1_and_srk_n0(tmp_path):
    oai, srk = synth.cu_du_load_truths()
    b = load_run_bundle(synth.generate_bundle_files(oai, 1, tmp_path / "oai1"))
    assert len(b.flows) == 1
    assert b.samples_for(Subject.CU) and b.samples_for(Subject.DU) and b.samples_for(Subject.HOST)
    assert not b.samples_for(Subject.GPU)
    b0 = load_run_bundle(synth.generate_bundle_files(srk, 0, tmp_path / "srk0"))
    assert b0.manifest.stack_id is StackId.SRK
    assert b0.flows == () or len(b0.flows) == 0
    assert b0.samples_for(Subject.GPU)


def test_missing_du_log_lists_path(tmp_path):
    oai = synth.cu_du_load_truths()[0]
    manifest = synth.generate_bundle_files(oai, 1, tmp_path / "run")
    m = parse_manifest(manifest.read_text(), manifest.parent)
    du_log = m.artifact_paths["du_log"]
    du_log.unlink()
    with pytest.raises(IngestError, match=str(du_log)):
        load_run_bundle(manifest)


def test_manifest_round_trip(tmp_path):
    oai = synth.cu_du_load_truths()[0]
    manifest = synth.generate_bundle_files(oai, 3, tmp_path / "run")
    m = parse_manifest(manifest.read_text(), manifest.parent)
    again = parse_manifest(render_manifest(m, manifest.parent), manifest.parent)
    assert again == m


def test_parse_render_round_trip_bit_exact(tmp_path):
    """Every typed field the generator produced is read back identically."""
    oai = synth.cu_du_load_truths()[0]
    run = oai.runs[2]
    art = synth.build_run_artifacts(oai, run, tmp_path / "run")
    manifest = synth.write_run_artifacts(art, tmp_path / "run")
    b = load_run_bundle(manifest)
    assert list(b.du_records) == sorted(art.du_records, key=lambda r: r.epoch_ms)
    assert sorted(b.samples, key=lambda s: (s.epoch_ms, s.subject.value)) == \
        sorted(art.samples + art.gpu_samples, key=lambda s: (s.epoch_ms, s.subject.value))
    assert list(b.telemetry) == list(art.telemetry)
    by_ue = {f.ue_id: f for f in b.flows}
    for f in art.flows:
        if f is None:
            continue
        got = by_ue[f.ue_id]
        assert got.complete == f.complete
        assert got.goodput_bps == pytest.approx(f.goodput_bps, rel=1e-9)


def test_random_noise_lines_do_not_crash():
    rng = random.Random(5)
    junk = ["".join(rng.choice("[]0123456789 .:abcIN_") for _ in range(rng.randint(0, 60))) for _ in range(500)]
    diag = []
    recs = parse_du_log(junk, diag)
    assert len(recs) <= len(junk)
