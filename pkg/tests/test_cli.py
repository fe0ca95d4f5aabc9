import json
import subprocess
import sys

import pytest

from swarmcap.cli import main

FAST = {"sync_cycles": 2, "folds": 1, "seeds": [1]}


def write_config(tmp_path, **extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**FAST, **extra}))
    return str(p)


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["gen", "--out", str(out)]) == 0
    return out


def test_gen_outputs(dataset):
    lines = (dataset / "dataset.csv").read_text().splitlines()
    assert len(lines) == 21166 + 1
    manifest = json.loads((dataset / "generation_manifest.json").read_text())
    assert manifest
    cfg = json.loads((dataset / "config.json").read_text())
    assert cfg["dataset_seed"] == 0


def snapshot(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_gen_is_byte_identical(dataset):
    # same command, same output directory
    before = snapshot(dataset)
    assert main(["gen", "--out", str(dataset)]) == 0
    assert snapshot(dataset) == before


def test_seed_from_environment(tmp_path, monkeypatch, dataset):
    monkeypatch.setenv("SWARMCAP_SEED", "5")
    assert main(["gen", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "dataset.csv").read_bytes() != (dataset / "dataset.csv").read_bytes()


def test_gen_rejects_unknown_generator_key(tmp_path, capsys):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"generator": {"tau_bogus": 1}}))
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "tau_bogus" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["gen", "--config", str(cfg)]) == 2


def test_run_outputs_and_determinism(tmp_path, dataset):
    cfg = write_config(tmp_path)
    a = tmp_path / "a"
    args = ["run", "--config", cfg, "--data", str(dataset / "dataset.csv"), "--case", "quality_biased",
            "--modes", "sl,sl_no_cwpa,ll", "--out", str(a)]
    assert main(args) == 0
    first = snapshot(a)
    assert set(first) >= {
        "report.csv", "report.json", "plotdata.csv", "config.json",
        "history/sl_fold0_seed1.csv", "history/sl_no_cwpa_fold0_seed1.json",
    }
    assert main(args) == 0
    assert snapshot(a) == first
    plot = (a / "plotdata.csv").read_text().splitlines()
    assert [ln.split(",")[0] for ln in plot[1:]] == ["ll", "sl", "sl_no_cwpa"]


def test_run_single_format(tmp_path, dataset):
    out = tmp_path / "o"
    cfg = write_config(tmp_path)
    rc = main(["run", "--config", cfg, "--data", str(dataset / "dataset.csv"), "--modes", "cl",
               "--format", "json", "--out", str(out)])
    assert rc == 0
    assert (out / "report.json").exists() and not (out / "report.csv").exists()


@pytest.mark.parametrize("flags", [["--case", "nosuch"], ["--modes", "ll,xx"], ["--format", "xml"], ["--seeds", "a"]])
def test_run_usage_errors(tmp_path, flags):
    assert main(["run", "--config", write_config(tmp_path), *flags, "--out", str(tmp_path)]) == 2


def test_run_missing_data_file(tmp_path):
    assert main(["run", "--config", write_config(tmp_path), "--data", str(tmp_path / "none.csv"),
                 "--out", str(tmp_path)]) == 1


def test_compare(tmp_path, dataset, capsys):
    cfg = write_config(tmp_path)
    for case in ("balanced", "volume_biased"):
        assert main(["run", "--config", cfg, "--data", str(dataset / "dataset.csv"), "--case", case,
                     "--modes", "cl", "--out", str(tmp_path / case)]) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "balanced" / "plotdata.csv"), str(tmp_path / "volume_biased" / "report.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split(",")[1] for ln in lines[1:]] == ["balanced", "volume_biased"]

    same = str(tmp_path / "balanced" / "report.csv")
    assert main(["compare", same, same, "--out", str(tmp_path / "cmp")]) == 0
    rows = (tmp_path / "cmp" / "compare_plotdata.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[1] == f"balanced@{same}" for r in rows) and len(rows) == 2


def test_compare_usage(tmp_path):
    assert main(["compare"]) == 2
    assert main(["compare", str(tmp_path / "missing.csv")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "swarmcap", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "compare" in res.stdout
