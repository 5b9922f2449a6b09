import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from spectpp import cli
from spectpp.errors import SamplingError


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_generate_jump(tmp_path):
    assert run("generate", "--model", "jump", "--n-samples", 4, "--out", tmp_path) == 0
    lines = (tmp_path / "data.jsonl").read_text().splitlines()
    assert len(lines) == 4
    assert json.loads((tmp_path / "params.json").read_text())["kind"] == "jump"


def test_generate_sparse_hawkes(tmp_path):
    assert run("generate", "--model", "hawkes", "--dim", 10, "--sparsity", 0.9, "--n-samples", 1,
               "--n-events", 5, "--out", tmp_path) == 0
    params = json.loads((tmp_path / "params.json").read_text())
    assert np.mean(np.array(params["adjacency"]) == 0) >= 0.9


def test_generate_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("generate", "--model", "hawkes5d", "--n-samples", 3, "--n-events", 20, "--seed", 4,
                   "--out", tmp_path / d) == 0
    for f in ("data.jsonl", "params.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_sample_modes(tmp_path):
    assert run("sample", "--model", "hawkes1d", "--mode", "autoregressive", "--n-samples", 2,
               "--n-events", 10, "--out", tmp_path) == 0
    s = json.loads((tmp_path / "stats_autoregressive.json").read_text())
    assert not any("constant" in k for k in s)
    assert len((tmp_path / "samples_autoregressive.jsonl").read_text().splitlines()) == 2


def test_top_k_step_not_smaller(tmp_path):
    steps = []
    for k in (1, 2):
        assert run("sample", "--model", "hawkes5d", "--mode", "speculative", "--top-k", k, "--n-samples", 4,
                   "--n-events", 100, "--seed", 2, "--out", tmp_path) == 0
        steps.append(json.loads((tmp_path / f"stats_top{k}.json").read_text())["avg_step"])
    assert steps[1] >= steps[0]


def test_renewal_full_step(tmp_path):
    assert run("sample", "--model", "renewal", "--mode", "speculative", "--step", 5, "--n-samples", 2,
               "--n-events", 50, "--out", tmp_path) == 0
    assert json.loads((tmp_path / "stats_top1.json").read_text())["avg_step"] == 5.0


def _pipeline(out):
    assert run("generate", "--model", "hawkes5d", "--n-samples", 2, "--n-events", 15, "--seed", 1,
               "--out", out / "data") == 0
    assert run("sample", "--model", out / "data" / "params.json", "--history", out / "data" / "data.jsonl",
               "--n-samples", 4, "--n-events", 12, "--seed", 1, "--out", out / "samples") == 0
    assert run("report", "--model", out / "data" / "params.json",
               "--reference", out / "samples" / "samples_autoregressive.jsonl",
               "--candidate", out / "samples" / "samples_top1.jsonl", "--out", out / "report") == 0
    return (out / "report" / "metrics.csv").read_bytes()


def test_pipeline_deterministic(tmp_path):
    a = _pipeline(tmp_path / "a")
    b = _pipeline(tmp_path / "b")
    assert a == b
    rows = read_csv(tmp_path / "a" / "report" / "metrics.csv")
    assert {r["variant"] for r in rows} == {"true", "top1"}
    assert {r["metric"] for r in rows} == {"kl", "mmd", "llr"}
    timing = read_csv(tmp_path / "a" / "report" / "timing.csv")
    assert {"encoder", "decoder", "sample", "rejection_const"} <= set(timing[0])


def test_report_identical_inputs(tmp_path):
    assert run("sample", "--model", "hawkes1d", "--n-samples", 4, "--n-events", 10, "--out", tmp_path) == 0
    ref = tmp_path / "samples_autoregressive.jsonl"
    assert run("report", "--model", "hawkes1d", "--reference", ref, "--candidate", ref,
               "--out", tmp_path / "r") == 0
    rows = {(r["metric"], r["variant"]): float(r["mean"]) for r in read_csv(tmp_path / "r" / "metrics.csv")}
    assert rows[("kl", "autoregressive")] == 0.0
    assert rows[("llr", "autoregressive")] == 0.0


def test_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.jsonl"
    code = run("report", "--reference", missing, "--candidate", missing, "--out", tmp_path)
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_config(tmp_path, capsys):
    assert run("sample", "--step", 0, "--out", tmp_path) == 2
    assert "step" in capsys.readouterr().err
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run("sample", "--config", cfg, "--out", tmp_path) == 2
    assert run("generate", "--model", "gru", "--out", tmp_path) == 2


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_events": 7, "n-samples": 1, "mode": "autoregressive"}))
    assert run("sample", "--config", cfg, "--n-events", 50, "--out", tmp_path) == 0
    line = (tmp_path / "samples_autoregressive.jsonl").read_text().splitlines()[0]
    assert len(json.loads(line)["times"]) == 7


def test_sampling_error_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise SamplingError("round 3 failed")
    monkeypatch.setattr(cli, "speculative_sample", boom)
    assert run("sample", "--mode", "speculative", "--out", tmp_path) == 3
    assert "round 3" in capsys.readouterr().err


def test_sweep_and_heatmap(tmp_path):
    assert run("sweep", "--dims", 4, 12, "--sparsities", 0.2, 0.8, "--a-maxes", 0.3, "--decays", 1.0,
               "--n-samples", 2, "--n-events", 40, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 4 and all(float(r["avg_step"]) >= 1 for r in rows)
    assert run("report", "--sweep", tmp_path / "sweep.csv", "--out", tmp_path / "r") == 0
    heat = read_csv(tmp_path / "r" / "heatmap.csv")
    assert len(heat) == 4
    trend = json.loads((tmp_path / "r" / "trend.json").read_text())
    assert "non_increasing_in_dim" in trend


def test_empty_sweep_axis(tmp_path):
    assert run("sweep", "--dims", "--out", tmp_path) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spectpp", "generate", "--model", "renewal", "--n-samples", "1",
                        "--n-events", "3", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and (tmp_path / "data.jsonl").exists()
