import pytest

from swarmcap.errors import ParseError
from swarmcap.experiments import RunRecord, RunReport, WeightRecord
from swarmcap.reports import (
    PLOTDATA_COLUMNS,
    emit_report,
    load_plotdata,
    load_report,
    plotdata_rows,
    report_from_csv,
    report_from_json,
    report_to_csv,
    report_to_json,
)


@pytest.fixture
def report():
    recs, ws = [], []
    for fold in range(2):
        for seed in (1, 2):
            for k in (1, 2, 3):
                recs.append(RunRecord("ll", f"node{k}", fold, seed, 0.5 + 0.1 * k + 0.01 * seed, 0.02 * k))
            recs.append(RunRecord("sl", "global", fold, seed, 0.45 + 0.001 * fold, 0.015))
            recs.append(RunRecord("cl", "global", fold, seed, 0.4 + 1 / 3, 0.014))
            ws += [WeightRecord("sl", f"node{k}", fold, seed, w) for k, w in zip((1, 2, 3), (0.2, 0.3, 0.5))]
    return RunReport("volume_biased", ("ll", "sl", "cl"), 2, (1, 2), recs, ws)


def test_csv_json_csv_roundtrip(report):
    text = report_to_csv(report)
    back = report_from_csv(text)
    assert back.records == report.records and back.weights == report.weights
    assert report_to_csv(report_from_json(report_to_json(back))) == text


def test_csv_has_all_row_types(report):
    lines = report_to_csv(report).splitlines()
    kinds = [ln.split(",", 1)[0] for ln in lines[1:]]
    assert kinds.count("raw") == len(report.records)
    assert kinds.count("weight") == 12
    assert kinds.count("summary") == 3 + 1 + 2  # ll nodes + node_mean, sl, cl


def test_plotdata_one_row_per_mode(report):
    rows = plotdata_rows(report)
    assert [r["mode"] for r in rows] == ["ll", "sl", "cl"]
    assert {r["label"] for r in rows} == {"volume_biased"}
    assert rows[0]["mean_mape"] == pytest.approx(0.5 + 0.2 + 0.015)


def test_emit_and_load(report, tmp_path):
    for fmt in ("csv", "json", "plotdata"):
        p = emit_report(report, fmt, tmp_path / f"r.{fmt}")
        q = emit_report(report, fmt, tmp_path / f"s.{fmt}")
        assert p.read_bytes() == q.read_bytes()
        # repr() floats read back exactly
        assert load_plotdata(p) == plotdata_rows(report)
    assert load_report(tmp_path / "r.json").records == report.records
    with pytest.raises(ValueError):
        emit_report(report, "xml", tmp_path / "r.xml")


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        report_from_csv("a,b\n1,2\n")
    with pytest.raises(ParseError):
        report_from_json("{}")
    p = tmp_path / "p.csv"
    p.write_text(",".join(PLOTDATA_COLUMNS) + "\nll,x,notanumber,0,0,0\n")
    with pytest.raises(ParseError, match="row 2"):
        load_plotdata(p)
