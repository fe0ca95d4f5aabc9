"""RunReport serialization: raw CSV, JSON, and per-mode plot tables."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .errors import ParseError
from .experiments import RunRecord, RunReport, WeightRecord

REPORT_COLUMNS = ("row_type", "scenario", "mode", "label", "fold", "seed", "mape", "rmse", "weight", "std_mape", "std_rmse")
PLOTDATA_COLUMNS = ("mode", "label", "mean_mape", "std_mape", "mean_rmse", "std_rmse")


def _f(x: float) -> str:
    return repr(float(x))


def report_to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in report.records:
        w.writerow(["raw", report.scenario, r.mode, r.label, r.fold, r.seed, _f(r.mape), _f(r.rmse), "", "", ""])
    for r in report.weights:
        w.writerow(["weight", report.scenario, r.mode, r.label, r.fold, r.seed, "", "", _f(r.weight), "", ""])
    for s in report.summary():
        w.writerow([
            "summary", report.scenario, s["mode"], s["label"], "", "",
            _f(s["mean_mape"]), _f(s["mean_rmse"]), "", _f(s["std_mape"]), _f(s["std_rmse"]),
        ])
    return buf.getvalue()


def report_from_csv(text: str) -> RunReport:
    """Rebuild a report from its CSV; summary rows are recomputed, not trusted."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise ParseError(f"not a report CSV (header {reader.fieldnames})", row=1)
    scenario, records, weights, modes = None, [], [], []
    folds, seeds = set(), []
    for line, row in enumerate(reader, start=2):
        try:
            scenario = scenario or row["scenario"]
            kind = row["row_type"]
            if kind == "summary":
                if row["mode"] not in modes:
                    modes.append(row["mode"])
                continue
            fold, seed = int(row["fold"]), int(row["seed"])
            folds.add(fold)
            if seed not in seeds:
                seeds.append(seed)
            if kind == "raw":
                records.append(RunRecord(row["mode"], row["label"], fold, seed, float(row["mape"]), float(row["rmse"])))
            elif kind == "weight":
                weights.append(WeightRecord(row["mode"], row["label"], fold, seed, float(row["weight"])))
            else:
                raise ValueError(f"unknown row_type {kind!r}")
        except (KeyError, ValueError) as exc:
            raise ParseError(str(exc), row=line) from None
    if scenario is None:
        raise ParseError("empty report")
    for r in records:
        if r.mode not in modes:
            modes.append(r.mode)
    return RunReport(scenario, tuple(modes), max(folds) + 1 if folds else 0, tuple(seeds), records, weights)


def report_to_json(report: RunReport) -> str:
    doc = {
        "scenario": report.scenario,
        "modes": list(report.modes),
        "folds": report.folds,
        "seeds": list(report.seeds),
        "records": [vars(r) for r in report.records],
        "weights": [vars(w) for w in report.weights],
        "summary": report.summary(),
    }
    return json.dumps(doc, indent=1) + "\n"


def report_from_json(text: str) -> RunReport:
    try:
        doc = json.loads(text)
        return RunReport(
            scenario=doc["scenario"],
            modes=tuple(doc["modes"]),
            folds=int(doc["folds"]),
            seeds=tuple(doc["seeds"]),
            records=[RunRecord(**r) for r in doc["records"]],
            weights=[WeightRecord(**w) for w in doc["weights"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"not a report JSON: {exc}") from None


def plotdata_rows(report: RunReport) -> list[dict]:
    """One row per mode, labelled by scenario; LL is the node mean."""
    rows = []
    for s in report.summary():
        if s["label"] in ("global", "node_mean"):
            rows.append({
                "mode": s["mode"],
                "label": report.scenario,
                **{k: s[k] for k in PLOTDATA_COLUMNS[2:]},
            })
    return rows


def plotdata_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLOTDATA_COLUMNS)
    for r in rows:
        w.writerow([r["mode"], r["label"], *(_f(r[k]) for k in PLOTDATA_COLUMNS[2:])])
    return buf.getvalue()


def plotdata_from_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != PLOTDATA_COLUMNS:
        raise ParseError(f"not a plotdata CSV (header {reader.fieldnames})", row=1)
    rows = []
    for line, r in enumerate(reader, start=2):
        try:
            rows.append({"mode": r["mode"], "label": r["label"], **{k: float(r[k]) for k in PLOTDATA_COLUMNS[2:]}})
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), row=line) from None
    return rows


def emit_report(report: RunReport, fmt: str, path) -> Path:
    """Write ``report`` as ``csv``, ``json`` or ``plotdata``."""
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report)
    elif fmt == "plotdata":
        text = plotdata_to_csv(plotdata_rows(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def load_report(path) -> RunReport:
    text = Path(path).read_text(encoding="utf-8")
    return report_from_json(text) if text.lstrip().startswith("{") else report_from_csv(text)


def load_plotdata(path) -> list[dict]:
    """Plot rows from a plotdata CSV, report CSV or report JSON."""
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith(",".join(PLOTDATA_COLUMNS)):
        return plotdata_from_csv(text)
    return plotdata_rows(load_report(path))
