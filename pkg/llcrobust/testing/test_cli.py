from __future__ import annotations

import json

from app import run_cli


def test_generate_is_reproducible(tmp_path):
    args = ["generate", "--d", "5", "--edge-prob", "0.3", "--conf-prob", "0.3", "--seed", "7"]
    assert run_cli(args + ["--out", str(tmp_path / "a.json")]) == 0
    assert run_cli(args + ["--out", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    raw = json.loads((tmp_path / "a.json").read_text(encoding="utf-8"))
    assert raw["generator"]["seed"] == 7
    assert len(raw["B"]) == 25


def test_generate_simulate_fit_pipeline(tmp_path):
    model = tmp_path / "model.json"
    data = tmp_path / "data"
    assert run_cli(["generate", "--d", "5", "--seed", "7", "--out", str(model)]) == 0
    assert any(json.loads(model.read_text(encoding="utf-8"))["B"])
    assert run_cli(["simulate", "--model", str(model), "--n", "100000", "--seed", "4", "--out", str(data)]) == 0
    assert sorted(p.name for p in data.glob("exp_*.csv")) == [f"exp_{k}.csv" for k in range(6)]
    assert json.loads((data / "design.json").read_text(encoding="utf-8"))["experiments"] == [
        [], [1], [2], [3], [4], [5]
    ]

    assert run_cli(["fit", "--data-dir", str(data), "--backend", "scm"]) == 0
    estimate = json.loads((data / "estimate.json").read_text(encoding="utf-8"))
    assert estimate["backend"] == "SCM"
    assert estimate["flag"] == {"Code": 0, "Name": "NONE"}
    assert estimate["rfe_b"] < 0.1
    assert estimate["rfe_sigma_e"] < 0.1


def test_simulate_contaminated_sidecar(tmp_path):
    model = tmp_path / "model.json"
    data = tmp_path / "data"
    assert run_cli(["generate", "--d", "3", "--seed", "5", "--out", str(model)]) == 0
    assert run_cli(
        ["simulate", "--model", str(model), "--n", "100", "--epsilon", "0.1", "--target", "e", "--out", str(data)]
    ) == 0
    sidecar = json.loads((data / "exp_1.json").read_text(encoding="utf-8"))
    assert sidecar["experiment"] == [1]
    assert sidecar["epsilon"] == 0.1
    assert sidecar["target"] == "e"


def test_usage_errors_exit_with_one(tmp_path):
    assert run_cli(["generate", "--bogus"]) == 1
    model = tmp_path / "model.json"
    assert run_cli(["generate", "--d", "3", "--out", str(model)]) == 0
    assert run_cli(["simulate", "--model", str(model), "--epsilon", "1.5", "--out", str(tmp_path / "d")]) == 1
    assert run_cli(["simulate", "--model", str(model), "--n", "50", "--out", str(tmp_path / "d")]) == 0
    assert run_cli(["fit", "--data-dir", str(tmp_path / "d"), "--backend", "ols"]) == 1


def test_malformed_model_exits_with_two(tmp_path):
    model = tmp_path / "model.json"
    model.write_text("{}", encoding="utf-8")
    assert run_cli(["simulate", "--model", str(model), "--out", str(tmp_path / "d")]) == 2


def test_bench_from_config_file(tmp_path):
    config = tmp_path / "bench.json"
    config.write_text(
        json.dumps({"n_models": 2, "d": 3, "n": 40, "epsilons": [0.0, 0.1], "estimators": ["SCM"]}),
        encoding="utf-8",
    )
    out = tmp_path / "out"
    assert run_cli(["bench", "--config", str(config), "--out-dir", str(out), "--seed", "11"]) == 0
    for name in ("records.csv", "aggregates.csv", "pvalues.csv", "boxplot.csv", "manifest.json"):
        assert (out / name).exists()
    assert json.loads((out / "manifest.json").read_text(encoding="utf-8"))["master_seed"] == 11


def test_bench_rejects_unknown_config_key(tmp_path):
    config = tmp_path / "bench.json"
    config.write_text(json.dumps({"models": 2}), encoding="utf-8")
    assert run_cli(["bench", "--config", str(config), "--out-dir", str(tmp_path / "out")]) == 1


def test_demo_breakdown_runs():
    assert run_cli(["demo-breakdown"]) == 0
