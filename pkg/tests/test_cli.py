import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from poroscope.cli import run
from poroscope.sets import cantor_raster, salli_raster
from poroscope.setio import load_set


def call(argv, capsys):
    code = run(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_cantor_file(tmp_path, capsys):
    p = tmp_path / "c.json"
    code, _, _ = call(["gen", "--family", "cantor", "--lam", "0.3", "--depth", "11", "--out", str(p)], capsys)
    assert code == 0
    S = load_set(p)
    assert S.depth == 11 and S == cantor_raster(0.3, 11)


def test_gen_salli_binary(tmp_path, capsys):
    p = tmp_path / "s.dcs"
    code, _, _ = call(["gen", "--family", "salli", "--n", "2", "--l", "3", "--depth", "10", "--out", str(p)], capsys)
    assert code == 0
    assert load_set(p) == salli_raster(2, 3, 10)


def test_gen_validation_exit_codes(capsys):
    code, _, err = call(["gen", "--family", "cantor", "--lam", "0.6", "--depth", "5"], capsys)
    assert code == 2 and "error" in err
    code, _, _ = call(["gen", "--family", "nope", "--depth", "5"], capsys)
    assert code == 2
    code, _, _ = call(["gen", "--family", "cantor", "--lam", "0.3"], capsys)
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        run(["gen", "--bogus-flag", "1"])
    assert exc.value.code == 2


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "full", "n": 2, "depth": 7, "format": "json"}))
    code, out, _ = call(["dimension", "--config", str(cfg)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["dim"] == pytest.approx(2.0, abs=0.01)
    assert {"tool_version", "config_echo", "seed"} <= set(doc)
    code, out, _ = call(["dimension", "--config", str(cfg), "--family", "segment"], capsys)
    assert json.loads(out)["result"]["dim"] == pytest.approx(1.0, abs=0.02)
    cfg.write_text(json.dumps({"family": "full", "depth": 7, "colour": "red"}))
    assert call(["dimension", "--config", str(cfg)], capsys)[0] == 2
    cfg.write_text(json.dumps({"family": "full", "depth": "seven"}))
    assert call(["dimension", "--config", str(cfg)], capsys)[0] == 2


def test_dimension_csv_and_ratios(capsys):
    code, out, _ = call(["dimension", "--ratios", "0.5,0.5,0.5"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["ratios", "similarity_dim"]
    assert float(rows[1][1]) == pytest.approx(math.log(3) / math.log(2), abs=1e-9)


def test_bounds_table(capsys):
    code, out, _ = call(["bounds", "--n", "2", "--m", "1", "--rho", "0.2", "--format", "json", "--salli-l", "1,3"], capsys)
    assert code == 0
    doc = json.loads(out)["result"]
    assert doc["bounds"][0]["bound_directed"] == pytest.approx(1.98980, abs=1e-5)
    assert doc["salli_dimension"]["1"] == pytest.approx(math.log2(3), abs=1e-9)
    assert call(["bounds", "--rho", "0.6"], capsys)[0] == 2


def test_porosity_resolution_error(capsys):
    code, _, err = call(["porosity", "--family", "cantor", "--lam", "0.3", "--depth", "8", "--ladder", "0.2,0.001"], capsys)
    assert code == 3


def test_porosity_directed_on_cylinder(capsys):
    argv = ["porosity", "--family", "salli_cylinder", "--n", "2", "--m", "1", "--l", "1", "--depth", "9",
            "--axes", "0", "--samples", "8", "--ladder-count", "3", "--format", "json"]
    code, out, _ = call(argv, capsys)
    assert code == 0
    assert json.loads(out)["result"]["value"] > 0


def test_lemmas_default_and_sabotage(capsys):
    code, out, _ = call(["lemmas", "--trials", "4000", "--calibration-trials", "1000"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 10 and all(r["failures"] == "0" for r in rows)
    code, out, err = call(["lemmas", "--trials", "4000", "--calibration-trials", "1000", "--sabotage"], capsys)
    assert code == 5
    assert "counterexamples" in err
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(int(r["failures"]) > 0 for r in rows)


def test_density_csv_header(tmp_path, capsys):
    p = tmp_path / "d.csv"
    argv = ["density", "--family", "cantor_power", "--lam", "0.3", "--depth", "8", "--s", "1.151", "--m", "1",
            "--alpha", "0.5", "--eta", "0.5,0.9", "--points", "2", "--ladder-count", "3", "--direction-budget", "8",
            "--plane-budget", "8", "--out", str(p)]
    assert call(argv, capsys)[0] == 0
    lines = p.read_text().splitlines()
    assert lines[0] == "label,n,m,s,alpha,eta,x1,x2,r,worst_ratio,slack,seed"
    assert len(lines) == 3
    meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
    assert meta["seed"] == 0 and meta["config_echo"]["s"] == 1.151


def test_outputs_identical_across_thread_counts(capsys):
    argv = ["porosity", "--family", "cantor_power", "--lam", "0.3", "--depth", "8", "--k", "2",
            "--samples", "6", "--ladder-count", "3", "--frame-budget", "16", "--refine-steps", "8", "--seed", "7"]
    outs = []
    for t in ("1", "4"):
        code, out, _ = call(argv + ["--threads", t, "--format", "json"], capsys)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_poro_log_keeps_stdout_clean():
    proc = subprocess.run(
        [sys.executable, "-m", "poroscope.cli", "dimension", "--family", "full", "--depth", "6"],
        capture_output=True, text=True, env={**os.environ, "PORO_LOG": "info"},
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("label,depth,count")
    assert "INFO" in proc.stderr
