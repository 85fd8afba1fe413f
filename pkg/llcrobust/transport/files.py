# llcrobust/transport/files.py
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from llcrobust.interface.llc_structs import (
    BenchmarkRecord,
    CausalModel,
    Experiment,
    ExperimentDesign,
    LlcEstimate,
    Sample,
)
from llcrobust.llc_enums import LLC_BACKEND, LLC_FLAG, serialize_flag
from llcrobust.utils import to_one_based, to_zero_based

log = logging.getLogger(__name__)


class FileFormatError(ValueError):
    """Raised when an input file does not follow the expected layout."""


def jsonable(value: Any) -> Any:
    """Plain JSON types for nested numpy/enum values; dict keys become strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, LLC_FLAG):
        return serialize_flag(value)
    if isinstance(value, LLC_BACKEND):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_json(path: str | Path, payload: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(jsonable(payload), f, indent=2, sort_keys=False)
        f.write("\n")
    return path


def read_json(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, LLC_BACKEND):
        return value.value
    if isinstance(value, LLC_FLAG):
        return value.name
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _matrix(raw: Sequence[float], d: int, name: str) -> np.ndarray:
    values = np.asarray(raw, dtype=float)
    if values.size != d * d:
        raise FileFormatError(f"{name} must have {d * d} entries, got {values.size}")
    return values.reshape(d, d)


def model_to_dict(model: CausalModel) -> dict[str, Any]:
    return {
        "d": model.d,
        "B": model.B.reshape(-1).tolist(),
        "SigmaE": model.SigmaE.reshape(-1).tolist(),
    }


def save_model(model: CausalModel, path: str | Path, meta: dict[str, Any] | None = None) -> Path:
    payload = model_to_dict(model)
    if meta:
        payload["generator"] = meta
    return write_json(path, payload)


def load_model(path: str | Path) -> CausalModel:
    raw = read_json(path)
    try:
        d = int(raw["d"])
        return CausalModel(d=d, B=_matrix(raw["B"], d, "B"), SigmaE=_matrix(raw["SigmaE"], d, "SigmaE"))
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing key {exc}") from exc


def save_design(design: ExperimentDesign, path: str | Path) -> Path:
    return write_json(path, {"d": design.d, "experiments": [to_one_based(e.J) for e in design.experiments]})


def load_design(path: str | Path, d: int | None = None) -> ExperimentDesign:
    raw = read_json(path)
    d = int(raw.get("d", d or 0))
    if d < 1:
        raise FileFormatError(f"{path}: node count unknown, add a 'd' key")
    try:
        sets = [to_zero_based(J, d) for J in raw["experiments"]]
    except KeyError as exc:
        raise FileFormatError(f"{path}: missing key {exc}") from exc
    return ExperimentDesign.from_intervention_sets(sets, d)


def save_sample(sample: Sample, path: str | Path, meta: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    header = [f"x{j + 1}" for j in range(sample.d)]
    write_csv(path, header, sample.data.tolist())
    sidecar = {"experiment": to_one_based(sample.experiment.J), "d": sample.d, "n": sample.n}
    sidecar.update(meta or {})
    write_json(path.with_suffix(".json"), sidecar)
    return path


def load_sample(path: str | Path) -> Sample:
    path = Path(path)
    sidecar = read_json(path.with_suffix(".json"))
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise FileFormatError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    d = len(header)
    if header != [f"x{j + 1}" for j in range(d)]:
        raise FileFormatError(f"{path}: header must be x1,...,x{d}")
    data = np.array(body, dtype=float).reshape(len(body), d)
    exp = Experiment.intervene(to_zero_based(sidecar.get("experiment", []), d), d)
    return Sample(experiment=exp, data=data)


def save_estimate(estimate: LlcEstimate, path: str | Path, extra: dict[str, Any] | None = None) -> Path:
    d = estimate.B_hat.shape[0]
    payload = {
        "d": d,
        "B": estimate.B_hat.reshape(-1).tolist(),
        "SigmaE": estimate.SigmaE_hat.reshape(-1).tolist(),
        "diagnostics": estimate.diagnostics,
    }
    payload.update(extra or {})
    return write_json(path, payload)


def read_records(path: str | Path) -> list[BenchmarkRecord]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != BenchmarkRecord.CSV_HEADER:
            raise FileFormatError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            BenchmarkRecord(
                model_id=int(row["model_id"]),
                estimator=LLC_BACKEND.parse(row["estimator"]),
                epsilon=float(row["epsilon"]),
                rfe_b=float(row["rfe_b"]),
                rfe_sigma_e=float(row["rfe_sigma_e"]),
                runtime=0.0,
                flag=LLC_FLAG[row["flag"]],
            )
            for row in reader
        ]
