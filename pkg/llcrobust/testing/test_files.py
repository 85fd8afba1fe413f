from __future__ import annotations

import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from llcrobust.interface.llc_structs import Experiment, LlcEstimate, Sample
from llcrobust.interface.model import random_model, single_intervention_design
from llcrobust.llc_enums import LLC_BACKEND, LLC_FLAG, serialize_flag
from llcrobust.transport.files import (
    FileFormatError,
    jsonable,
    load_design,
    load_model,
    load_sample,
    read_records,
    save_design,
    save_estimate,
    save_model,
    save_sample,
)


def test_model_file_is_row_major(tmp_path):
    model = random_model(3, 0.5, 0.5, np.random.default_rng(1))
    path = save_model(model, tmp_path / "model.json", meta={"seed": 1})
    raw = json.loads(path.read_text(encoding="utf-8"))
    assert raw["d"] == 3
    assert raw["B"][1] == model.B[0, 1]
    assert raw["generator"] == {"seed": 1}
    loaded = load_model(path)
    assert_array_equal(loaded.B, model.B)
    assert_array_equal(loaded.SigmaE, model.SigmaE)


def test_model_file_errors(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"d": 2, "B": [0, 0, 0]}', encoding="utf-8")
    with pytest.raises(FileFormatError):
        load_model(path)
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(FileFormatError):
        load_model(path)


def test_design_file_uses_one_based_nodes(tmp_path):
    design = single_intervention_design(3)
    path = save_design(design, tmp_path / "design.json")
    assert json.loads(path.read_text(encoding="utf-8"))["experiments"] == [[], [1], [2], [3]]
    assert load_design(path) == design


def test_design_file_rejects_out_of_range_nodes(tmp_path):
    path = tmp_path / "design.json"
    path.write_text('{"d": 2, "experiments": [[], [0]]}', encoding="utf-8")
    with pytest.raises(ValueError):
        load_design(path)


def test_sample_file_and_sidecar(tmp_path):
    data = np.random.default_rng(2).standard_normal((5, 3))
    sample = Sample(Experiment.intervene([1], 3), data)
    path = save_sample(sample, tmp_path / "exp_2.csv", meta={"seed": 4})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "x1,x2,x3"
    assert len(lines) == 6
    sidecar = json.loads((tmp_path / "exp_2.json").read_text(encoding="utf-8"))
    assert sidecar["experiment"] == [2]
    assert sidecar["seed"] == 4

    loaded = load_sample(path)
    assert loaded.experiment == sample.experiment
    assert_array_equal(loaded.data, data)


def test_sample_file_rejects_bad_header(tmp_path):
    (tmp_path / "s.csv").write_text("a,b\n1,2\n", encoding="utf-8")
    (tmp_path / "s.json").write_text('{"experiment": []}', encoding="utf-8")
    with pytest.raises(FileFormatError):
        load_sample(tmp_path / "s.csv")


def test_estimate_file_carries_diagnostics(tmp_path):
    estimate = LlcEstimate(
        B_hat=np.zeros((2, 2)),
        SigmaE_hat=np.eye(2),
        diagnostics={"block_conditions": {0: 1.0, 1: float("inf")}, "backend": LLC_BACKEND.MCD},
    )
    raw = json.loads(save_estimate(estimate, tmp_path / "est.json", {"seed": 3}).read_text(encoding="utf-8"))
    assert raw["SigmaE"] == [1.0, 0.0, 0.0, 1.0]
    assert raw["diagnostics"]["block_conditions"] == {"0": 1.0, "1": "inf"}
    assert raw["diagnostics"]["backend"] == "MCD"
    assert raw["seed"] == 3


def test_read_records_checks_header(tmp_path):
    path = tmp_path / "records.csv"
    path.write_text("model_id,estimator,epsilon\n0,SCM,0.0\n", encoding="utf-8")
    with pytest.raises(FileFormatError):
        read_records(path)
    path.write_text(
        "model_id,estimator,epsilon,rfe_b,rfe_sigma_e,flag\n3,GDE,0.05,0.5,nan,NOT_FINITE\n", encoding="utf-8"
    )
    (record,) = read_records(path)
    assert record.estimator is LLC_BACKEND.GDE
    assert record.flag is LLC_FLAG.NOT_FINITE
    assert np.isnan(record.rfe_sigma_e)


def test_jsonable_serializes_flags_with_code_and_name():
    assert jsonable({"a": np.float64(1.5), "b": np.arange(2), "f": LLC_FLAG.ILL_CONDITIONED}) == {
        "a": 1.5,
        "b": [0, 1],
        "f": {"Code": 2, "Name": "ILL_CONDITIONED"},
    }
    assert jsonable([LLC_FLAG.GENERATION_FAILED]) == [serialize_flag(LLC_FLAG.GENERATION_FAILED)]
    assert serialize_flag(LLC_FLAG.RANK_DEFICIENT) == {"Code": 3, "Name": "RANK_DEFICIENT"}
