import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from adla import cli
from adla.cli import EXIT_DATA, EXIT_LEAK, EXIT_OK, EXIT_USAGE
from adla.trace_io import TraceSet, load_trace_set, save_trace_set

DATA = Path(__file__).parent / "data"


def adla(*args, env=None):
    full_env = dict(os.environ, COLUMNS="80", **(env or {}))
    return subprocess.run([sys.executable, "-m", "adla", *map(str, args)],
                          capture_output=True, text=True, env=full_env)


def main(argv):
    """Exit status of an in-process run; argparse failures arrive as SystemExit."""
    try:
        return cli.main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


def md5(path):
    return hashlib.md5(Path(path).read_bytes()).hexdigest()


@pytest.mark.parametrize("command", ["main", "simulate", "assess", "threshold", "qq"])
def test_help_matches_golden(command):
    args = ["--help"] if command == "main" else [command, "--help"]
    proc = adla(*args)
    assert proc.returncode == 0
    assert proc.stdout == (DATA / f"help_{command}.txt").read_text()


def test_version():
    proc = adla("--version")
    assert proc.returncode == 0 and proc.stdout.startswith("adla 0.1.0")


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["simulate", "--scenario", "unprotected"],
    ["simulate", "--scenario", "nope", "--out-a", "a", "--out-b", "b"],
    ["simulate", "--scenario", "unprotected", "--traces", "0", "--out-a", "a", "--out-b", "b"],
    ["threshold", "--alpha", "0.6"],
    ["threshold", "--alpha", "0"],
    ["threshold", "--method", "guess"],
    ["threshold", "--alpha", "0.01", "--method", "paper_constant"],
    ["assess", "--set-a", "a.adla"],
    ["assess", "--set-a", "a", "--set-b", "b", "--alpha", "1.5"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_simulate_too_few_samples_is_usage_error(tmp_path):
    assert main(["simulate", "--scenario", "jittered", "--samples", "10",
                 "--out-a", tmp_path / "a", "--out-b", tmp_path / "b"]) == EXIT_USAGE


def test_threshold_text_and_json():
    proc = adla("threshold")
    assert proc.returncode == 0
    assert "tau_t        4.500000" in proc.stdout
    assert "Pearson type VI" in proc.stdout
    spec = json.loads(adla("threshold", "--format", "json").stdout)
    assert spec["tau_t"] == 4.5 and round(spec["tau_a"], 2) == 11.99
    assert spec["pearson_type"] == "VI" and spec["mc_check"] is None


def test_threshold_mc_check(capsys):
    assert main(["threshold", "--alpha", "0.01", "--mc-check", "20000", "--format", "json"]) == EXIT_OK
    spec = json.loads(capsys.readouterr().out)
    assert spec["mc_check"]["draws"] == 20000
    assert main(["threshold", "--mc-check", "1000"]) == EXIT_OK
    captured = capsys.readouterr()
    assert "skipped" in captured.err and "Monte Carlo" not in captured.out


def test_constant_method(capsys):
    assert main(["threshold", "--method", "paper_constant", "--format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["tau_a"] == 11.99


@pytest.fixture
def simulated(tmp_path):
    a, b = tmp_path / "a.adla", tmp_path / "b.adla"
    assert main(["simulate", "--scenario", "unprotected", "--traces", "300", "--seed", "3",
                 "--out-a", a, "--out-b", b]) == EXIT_OK
    return a, b


def test_simulate_writes_labelled_sets(simulated):
    a, b = simulated
    ts = load_trace_set(a)
    assert ts.samples.shape == (300, 64) and ts.dtype == "real64"
    assert ts.label == "unprotected: x=0.1"
    assert load_trace_set(b).label == "unprotected: x=0.9"


def test_simulate_is_deterministic_across_threads(tmp_path, simulated):
    a, b = simulated
    a2, b2 = tmp_path / "a2.adla", tmp_path / "b2.adla"
    assert main(["simulate", "--scenario", "unprotected", "--traces", "300", "--seed", "3",
                 "--out-a", a2, "--out-b", b2, "--threads", "3"]) == EXIT_OK
    assert md5(a) == md5(a2) and md5(b) == md5(b2)


def test_simulate_real32_and_csv(tmp_path):
    a, b = tmp_path / "a.adla", tmp_path / "b.csv"
    assert main(["simulate", "--scenario", "shuffled", "--traces", "5", "--out-a", a, "--out-b", b,
                 "--dtype", "real32"]) == EXIT_OK
    assert load_trace_set(a).dtype == "real32"
    assert b.read_text().count("\n") == 5
    assert load_trace_set(b).samples.shape == (5, 64)


def test_assess_outputs(tmp_path, simulated):
    a, b = simulated
    out = {k: tmp_path / f"r.{k}" for k in ("csv", "json", "svg")}
    proc = adla("assess", "--set-a", a, "--set-b", b, "--csv", out["csv"], "--json", out["json"],
                "--svg", out["svg"])
    assert proc.returncode == EXIT_OK
    summary = json.loads(proc.stdout)
    assert summary["tvla_leaks"] and summary["n_traces_used"] == 300
    assert "per_sample" not in summary
    assert out["csv"].read_text().count("\n") == 65
    full = json.loads(out["json"].read_text())
    assert len(full["per_sample"]) == 64
    assert out["svg"].read_text().startswith("<svg")
    assert "TVLA leaks" in proc.stderr


def test_assess_is_deterministic_across_threads(tmp_path, simulated):
    a, b = simulated
    j1, j4 = tmp_path / "1.json", tmp_path / "4.json"
    assert main(["assess", "--set-a", a, "--set-b", b, "--json", j1, "--threads", "1"]) == EXIT_OK
    assert main(["assess", "--set-a", a, "--set-b", b, "--json", j4, "--threads", "4"]) == EXIT_OK
    assert md5(j1) == md5(j4)


def test_assess_threads_from_environment(tmp_path, simulated):
    a, b = simulated
    j1, je = tmp_path / "1.json", tmp_path / "e.json"
    assert adla("assess", "--set-a", a, "--set-b", b, "--json", j1).returncode == 0
    assert adla("assess", "--set-a", a, "--set-b", b, "--json", je, env={"ADLA_THREADS": "3"}).returncode == 0
    assert md5(j1) == md5(je)


def test_assess_max_per_sample(tmp_path, simulated):
    a, b = simulated
    j = tmp_path / "r.json"
    assert main(["assess", "--set-a", a, "--set-b", b, "--json", j, "--max-per-sample", "10"]) == EXIT_OK
    assert json.loads(j.read_text())["per_sample"] is None


def test_fail_on_leak(tmp_path, simulated):
    a, b = simulated
    assert main(["assess", "--set-a", a, "--set-b", b, "--fail-on-leak"]) == EXIT_LEAK
    assert main(["assess", "--set-a", a, "--set-b", a, "--fail-on-leak"]) == EXIT_OK


def test_assess_curve(tmp_path, simulated, capsys):
    a, b = simulated
    curve = tmp_path / "curve.csv"
    assert main(["assess", "--set-a", a, "--set-b", b, "--grid", "50,100,300", "--curve", curve]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert [p[0] for p in summary["detection_curve"]] == [50, 100, 300]
    assert summary["traces_to_detection"]["tvla"] == 50
    assert curve.read_text().splitlines()[0] == "n,max_t_norm,max_a2_norm"
    assert main(["assess", "--set-a", a, "--set-b", b, "--grid", "50,900"]) == EXIT_USAGE
    assert main(["assess", "--set-a", a, "--set-b", b, "--grid", "5,x"]) == EXIT_USAGE


def test_default_curve_grid(tmp_path, simulated, capsys):
    a, b = simulated
    assert main(["assess", "--set-a", a, "--set-b", b, "--curve", tmp_path / "c.csv"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)["detection_curve"]) == 20


def test_data_errors_exit_2(tmp_path, simulated):
    a, _ = simulated
    assert main(["assess", "--set-a", tmp_path / "missing.adla", "--set-b", a]) == EXIT_DATA
    bad = tmp_path / "bad.adla"
    bad.write_bytes(b"JUNKJUNKJUNKJUNK")
    assert main(["assess", "--set-a", bad, "--set-b", a]) == EXIT_DATA
    short = tmp_path / "short.adla"
    save_trace_set(TraceSet(np.zeros((10, 64))), short)
    assert main(["assess", "--set-a", short, "--set-b", a]) == EXIT_DATA
    narrow = tmp_path / "narrow.adla"
    save_trace_set(TraceSet(np.zeros((300, 3))), narrow)
    assert adla("assess", "--set-a", narrow, "--set-b", a).returncode == EXIT_DATA


def test_qq(tmp_path, simulated, capsys):
    a, _ = simulated
    out = tmp_path / "qq.csv"
    assert main(["qq", "--set", a, "--sample-index", "8", "--out", out]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "theoretical,empirical" and len(lines) == 301
    values = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert np.all(np.diff(values[:, 0]) > 0) and np.all(np.diff(values[:, 1]) >= 0)
    assert "slope" in capsys.readouterr().err
    assert main(["qq", "--set", a, "--sample-index", "64"]) == EXIT_USAGE


def test_qq_to_stdout(simulated):
    proc = adla("qq", "--set", simulated[0], "--sample-index", "0")
    assert proc.returncode == 0 and proc.stdout.startswith("theoretical,empirical\n")


def test_documented_pipeline_is_byte_identical(tmp_path):
    digests = []
    for run in ("1", "2"):
        d = tmp_path / run
        d.mkdir()
        assert main(["simulate", "--scenario", "shuffled_jittered", "--traces", "1000", "--samples", "4096",
                     "--seed", "7", "--out-a", d / "a.adla", "--out-b", d / "b.adla"]) == EXIT_OK
        assert main(["assess", "--set-a", d / "a.adla", "--set-b", d / "b.adla", "--alpha", "3.4e-6",
                     "--csv", d / "stats.csv", "--json", d / "report.json"]) == EXIT_OK
        assert main(["qq", "--set", d / "a.adla", "--sample-index", "1316", "--out", d / "qq.csv"]) == EXIT_OK
        digests.append([md5(d / f) for f in ("a.adla", "b.adla", "stats.csv", "report.json", "qq.csv")])
    assert digests[0] == digests[1]
    assert (tmp_path / "1" / "stats.csv").read_text().count("\n") == 4097


def test_missing_flag_rejected_before_io(tmp_path):
    out_a = tmp_path / "a.adla"
    assert main(["simulate", "--scenario", "unprotected", "--out-a", out_a]) == EXIT_USAGE
    assert main(["simulate", "--scenario", "unprotected", "--out-a", out_a, "--out-b", tmp_path / "b",
                 "--bogus"]) == EXIT_USAGE
    assert not out_a.exists()
