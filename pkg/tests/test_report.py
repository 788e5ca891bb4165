import csv
import io
import json

import pytest

from ranforensics.errors import ReportError
from ranforensics.report import (
    PLOT_SAMPLES, StudyReport, assemble_report, load_report, render_report, write_report,
)


def test_text_table_rows_and_na(cu_du_report):
    text = render_report(cu_du_report, "text")["report.txt"]
    table = text.split("DERIVED CONSTANTS")[0].splitlines()
    leading = [line.split()[0] for line in table if line[:2].strip().isdigit()]
    assert leading == ["0", "1", "3", "6", "12"]
    idle = next(line for line in table if line.split()[:1] == ["0"])
    assert idle.split()[1:5] == ["NA", "NA", "NA", "NA"]
    for heading in ("KPI TABLE", "DERIVED CONSTANTS AND FITS", "DIAGNOSES", "SETTINGS"):
        assert heading in text


def test_text_mentions_derived_constants(cu_du_report):
    text = render_report(cu_du_report, "text")["report.txt"]
    assert "R_raw = 142.46 Mbps" in text
    assert "eta = 0.80" in text and "eta = 0.73" in text
    assert "7.01x" in text and "6.40x" in text
    assert "N=1: 0.37 W/Mbps, N=12: 1.06 W/Mbps" in text


def test_json_round_trip(cu_du_report, tmp_path):
    doc = render_report(cu_du_report, "json")["report.json"]
    again = StudyReport.from_dict(json.loads(doc))
    assert again == cu_du_report
    assert render_report(again, "json")["report.json"] == doc
    write_report(cu_du_report, tmp_path, ["json"])
    assert load_report(tmp_path / "report.json") == cu_du_report


def test_json_derived_values(cu_du_report):
    d = json.loads(render_report(cu_du_report, "json")["report.json"])["derived"]
    assert d["r_raw_bps"] == 142_464_000
    assert d["eta"]["OAI"] == pytest.approx(0.804, abs=1e-3)
    assert d["eta"]["SRK"] == pytest.approx(0.725, abs=1e-3)


def test_csv_plot(cu_du_report):
    docs = render_report(cu_du_report, "csv-plot")
    assert set(docs) == {"plot_oai.csv", "plot_srk.csv"}
    rows = list(csv.DictReader(io.StringIO(docs["plot_oai.csv"])))
    measured = [r for r in rows if r["t_measured"]]
    assert [int(r["n"]) for r in measured] == [1, 3, 6, 12]
    assert len(rows) - len(measured) == PLOT_SAMPLES
    fit = cu_du_report.fits["OAI"]
    for r in rows:
        n = float(r["n"])
        assert float(r["t_fitted"]) == pytest.approx(fit.a * n ** fit.b, rel=1e-12)


def test_rendering_is_byte_stable(cu_du_report):
    for fmt in ("text", "json", "csv-plot"):
        assert render_report(cu_du_report, fmt) == render_report(cu_du_report, fmt)


def test_unknown_format(cu_du_report):
    with pytest.raises(ReportError):
        render_report(cu_du_report, "pdf")


def test_report_requires_diagnosis_for_multi_row_stacks(cu_du_report):
    with pytest.raises(ReportError):
        StudyReport(cu_du_report.kpi_rows, cu_du_report.fits, cu_du_report.derived, {}, [], {})


def test_assemble_from_rows_diagnoses_itself(cu_du_report):
    rep = assemble_report(cu_du_report.kpi_rows, None)
    assert rep.diagnoses["OAI"].verdict.value == "HarnessLimited"
    assert "r_raw_bps" not in rep.derived
