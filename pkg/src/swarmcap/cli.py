"""Command line: ``swarmcap gen | run | compare``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Settings come from an optional JSON ``--config`` file; flags win over it.
The fully resolved config is written next to every output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .data import GeneratorParams, generate_dataset, load_csv, save_csv, write_generator_manifest
from .errors import ConfigError, ParseError, SwarmCapError
from .experiments import MODES, ExperimentConfig, run_case_study
from .model import Architecture, TrainHyper
from .reports import emit_report, load_plotdata, plotdata_to_csv
from .scenarios import SCENARIO_NAMES
from .swarm import history_to_csv, history_to_json

log = logging.getLogger("swarmcap")

FORMATS = ("csv", "json", "plotdata")

DEFAULTS = {
    "dataset_seed": 0,
    "generator": {},
    "data": None,
    "case": "balanced",
    "modes": ["ll", "sl", "cl"],
    "folds": 5,
    "seeds": [1, 2, 3],
    "sync_cycles": 100,
    "local_epochs_per_cycle": 1,
    "alpha": 1.0,
    "hyper": {},
    "layers": [3, 12, 8, 1],
    "out": "out",
    "formats": list(FORMATS),
    "jobs": 1,
}


class UsageError(Exception):
    pass


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    env_seed = os.environ.get("SWARMCAP_SEED")
    if env_seed is not None:
        try:
            cfg["dataset_seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"SWARMCAP_SEED must be an integer, got {env_seed!r}") from None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(user, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in user.items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            cfg[key] = value

    if getattr(args, "case", None):
        cfg["case"] = args.case
    if getattr(args, "modes", None):
        cfg["modes"] = _split_list(args.modes)
    if getattr(args, "folds", None) is not None:
        cfg["folds"] = args.folds
    if getattr(args, "seeds", None):
        try:
            cfg["seeds"] = [int(s) for s in _split_list(args.seeds)]
        except ValueError:
            raise UsageError(f"--seeds must be integers, got {args.seeds!r}") from None
    if getattr(args, "out", None):
        cfg["out"] = args.out
    if getattr(args, "format", None):
        cfg["formats"] = [f for spec in args.format for f in _split_list(spec)]
    if getattr(args, "jobs", None) is not None:
        cfg["jobs"] = args.jobs
    if getattr(args, "data", None):
        cfg["data"] = args.data

    if cfg["case"] not in SCENARIO_NAMES:
        raise UsageError(f"unknown case {cfg['case']!r}; choose from {', '.join(SCENARIO_NAMES)}")
    for m in cfg["modes"]:
        if m not in MODES:
            raise UsageError(f"unknown mode {m!r}; choose from {', '.join(MODES)}")
    for f in cfg["formats"]:
        if f not in FORMATS:
            raise UsageError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
    if not cfg["seeds"]:
        raise UsageError("at least one seed is required")
    try:
        cfg["generator"] = GeneratorParams.from_overrides(cfg["generator"]).to_dict()
        hyper = TrainHyper(**cfg["hyper"])
        Architecture(tuple(cfg["layers"]))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    except TypeError as exc:
        raise UsageError(f"bad hyper parameter: {exc}") from None
    cfg["hyper"] = dataclasses.asdict(hyper)
    return cfg


def experiment_config(cfg: dict) -> ExperimentConfig:
    return ExperimentConfig(
        sync_cycles=int(cfg["sync_cycles"]),
        local_epochs_per_cycle=int(cfg["local_epochs_per_cycle"]),
        alpha=float(cfg["alpha"]),
        hyper=TrainHyper(**cfg["hyper"]),
        arch=Architecture(tuple(cfg["layers"])),
    )


def _write_config(cfg: dict, out: Path) -> None:
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _generator(cfg: dict) -> GeneratorParams:
    return GeneratorParams.from_overrides(cfg["generator"])


def cmd_gen(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    params = _generator(cfg)
    pool = generate_dataset(int(cfg["dataset_seed"]), params)
    save_csv(pool, out / "dataset.csv")
    write_generator_manifest(params, int(cfg["dataset_seed"]), out / "generation_manifest.json")
    _write_config(cfg, out)
    print(f"wrote {len(pool)} rows to {out / 'dataset.csv'}")
    return 0


def cmd_run(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["data"]:
        pool = load_csv(cfg["data"])
    else:
        pool = generate_dataset(int(cfg["dataset_seed"]), _generator(cfg))
    report = run_case_study(
        pool,
        cfg["case"],
        modes=cfg["modes"],
        folds=int(cfg["folds"]),
        seeds=cfg["seeds"],
        config=experiment_config(cfg),
        jobs=int(cfg["jobs"]),
    )
    names = {"csv": "report.csv", "json": "report.json", "plotdata": "plotdata.csv"}
    for fmt in cfg["formats"]:
        emit_report(report, fmt, out / names[fmt])
    if report.histories:
        hdir = out / "history"
        hdir.mkdir(exist_ok=True)
        for (mode, fold, seed), hist in report.histories.items():
            stem = f"{mode}_fold{fold}_seed{seed}"
            (hdir / f"{stem}.csv").write_text(history_to_csv(hist), encoding="utf-8")
            (hdir / f"{stem}.json").write_text(history_to_json(hist), encoding="utf-8")
    _write_config(cfg, out)
    for mode in report.modes:
        print(f"{report.scenario:>24} {mode:>10}  mean MAPE {report.headline(mode):.3f}%")
    log.info("wall time %.1fs", report.wall_time_s)
    return 0


def cmd_compare(paths: list[str], out: str | None) -> int:
    if not paths:
        raise UsageError("compare needs at least one report")
    loaded = []
    for p in paths:
        try:
            loaded.append((p, load_plotdata(p)))
        except OSError as exc:
            raise UsageError(f"cannot read {p}: {exc}") from None
        except ParseError as exc:
            raise UsageError(f"{p}: {exc}") from None
    counts: dict[str, int] = {}
    for _, rows in loaded:
        for label in {r["label"] for r in rows}:
            counts[label] = counts.get(label, 0) + 1
    merged = []
    for p, rows in loaded:
        for r in rows:
            r = dict(r)
            if counts[r["label"]] > 1:
                r["label"] = f"{r['label']}@{p}"
            merged.append(r)
    text = plotdata_to_csv(merged)
    if out:
        target = Path(out)
        if target.suffix != ".csv":
            target.mkdir(parents=True, exist_ok=True)
            target = target / "compare_plotdata.csv"
        target.write_text(text, encoding="utf-8")
        print(f"wrote {len(merged)} rows to {target}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmcap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate the synthetic dataset CSV")
    gen.add_argument("--config")
    gen.add_argument("--out")

    run = sub.add_parser("run", help="run a case study")
    run.add_argument("--config")
    run.add_argument("--case")
    run.add_argument("--modes", help="comma list of ll,sl,sl_no_cwpa,cl")
    run.add_argument("--folds", type=int)
    run.add_argument("--seeds", help="comma list of integers")
    run.add_argument("--out")
    run.add_argument("--format", action="append", help="csv|json|plotdata (repeatable)")
    run.add_argument("--jobs", type=int)
    run.add_argument("--data", help="dataset CSV; generated when omitted")

    cmp_ = sub.add_parser("compare", help="merge plot tables of several reports")
    cmp_.add_argument("reports", nargs="*")
    cmp_.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "compare":
            return cmd_compare(args.reports, args.out)
        cfg = resolve_config(args)
        return cmd_gen(cfg) if args.command == "gen" else cmd_run(cfg)
    except UsageError as exc:
        print(f"swarmcap: error: {exc}", file=sys.stderr)
        return 2
    except (SwarmCapError, OSError) as exc:
        print(f"swarmcap: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
