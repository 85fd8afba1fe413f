from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, ClassVar, Sequence

import numpy as np

from llcrobust import bench_settings as defaults
from llcrobust.llc_enums import LLC_BACKEND, LLC_FLAG, LLC_TARGET


@dataclass(frozen=True, eq=False)
class CausalModel:
    """The pair (B, SigmaE); b_ij is the direct effect of x_j on x_i."""

    d: int
    B: np.ndarray
    SigmaE: np.ndarray

    def __post_init__(self) -> None:
        B = np.asarray(self.B, dtype=float)
        S = np.asarray(self.SigmaE, dtype=float)
        if self.d < 1:
            raise ValueError("d must be positive")
        if B.shape != (self.d, self.d) or S.shape != (self.d, self.d):
            raise ValueError(f"B and SigmaE must be {self.d}x{self.d}, got {B.shape} and {S.shape}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "SigmaE", S)

    @classmethod
    def from_matrices(cls, B, SigmaE) -> "CausalModel":
        B = np.asarray(B, dtype=float)
        return cls(d=B.shape[0], B=B, SigmaE=np.asarray(SigmaE, dtype=float))


@dataclass(frozen=True)
class Experiment:
    """Partition of the 0-based node indices into intervened J and observed U."""

    J: tuple[int, ...]
    U: tuple[int, ...]

    def __post_init__(self) -> None:
        J = tuple(sorted(int(j) for j in self.J))
        U = tuple(sorted(int(u) for u in self.U))
        if set(J) & set(U):
            raise ValueError("J and U must be disjoint")
        if len(set(J)) != len(J) or len(set(U)) != len(U):
            raise ValueError("J and U must not repeat indices")
        if sorted(J + U) != list(range(len(J) + len(U))):
            raise ValueError("J and U must partition {0..d-1}")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "U", U)

    @classmethod
    def intervene(cls, J, d: int) -> "Experiment":
        J = tuple(sorted(set(int(j) for j in J)))
        if any(j < 0 or j >= d for j in J):
            raise ValueError(f"intervened index out of range for d={d}: {J}")
        return cls(J=J, U=tuple(k for k in range(d) if k not in J))

    @property
    def d(self) -> int:
        return len(self.J) + len(self.U)

    @property
    def is_observational(self) -> bool:
        return not self.J

    def label(self) -> str:
        if self.is_observational:
            return "obs"
        return "J" + "-".join(str(j + 1) for j in self.J)


@dataclass(frozen=True)
class ExperimentDesign:
    experiments: tuple[Experiment, ...]
    d: int

    def __post_init__(self) -> None:
        experiments = tuple(self.experiments)
        object.__setattr__(self, "experiments", experiments)
        if sum(1 for e in experiments if e.is_observational) > 1:
            raise ValueError("at most one purely observational experiment is allowed")
        for exp in experiments:
            if exp.d != self.d:
                raise ValueError(f"experiment {exp.label()} is not over {self.d} nodes")

    @classmethod
    def from_intervention_sets(cls, sets, d: int) -> "ExperimentDesign":
        return cls(experiments=tuple(Experiment.intervene(J, d) for J in sets), d=d)

    @property
    def K(self) -> int:
        return len(self.experiments)

    @property
    def observational_index(self) -> int | None:
        for k, exp in enumerate(self.experiments):
            if exp.is_observational:
                return k
        return None


@dataclass(frozen=True, eq=False)
class InterventionSpec:
    SigmaC: np.ndarray | None = None

    def covariance(self, d: int, J: Sequence[int] = ()) -> np.ndarray:
        """Covariance of c; its J x J block must be symmetric positive definite."""
        if self.SigmaC is None:
            return np.eye(d)
        S = np.asarray(self.SigmaC, dtype=float)
        if S.shape != (d, d):
            raise ValueError(f"SigmaC must be {d}x{d}, got {S.shape}")
        if len(J):
            block = S[np.ix_(list(J), list(J))]
            if not np.allclose(block, block.T):
                raise ValueError(f"SigmaC is not symmetric on the intervened nodes {list(J)}")
            try:
                np.linalg.cholesky(block)
            except np.linalg.LinAlgError as exc:
                raise ValueError(f"SigmaC is not positive definite on the intervened nodes {list(J)}") from exc
        return S


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations


@dataclass(frozen=True, eq=False)
class Sample:
    experiment: Experiment
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != self.experiment.d:
            raise ValueError(f"sample data must be n x {self.experiment.d}, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("sample data must be finite")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    def with_data(self, data: np.ndarray) -> "Sample":
        return Sample(experiment=self.experiment, data=data)


@dataclass(frozen=True)
class ContaminationSpec:
    rate: float
    target: LLC_TARGET = LLC_TARGET.X
    outlier_location: float = defaults.OUTLIER_LOCATION
    outlier_scale: float = defaults.OUTLIER_SCALE

    def __post_init__(self) -> None:
        object.__setattr__(self, "target", LLC_TARGET.parse(self.target))
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"contamination rate must be in [0, 1), got {self.rate}")
        if self.outlier_scale <= 0:
            raise ValueError("outlier scale must be positive")

    def n_replaced(self, n: int) -> int:
        # floor with a guard against 0.1 * 200 = 19.999...
        return int(np.floor(self.rate * n + 1e-9))


@dataclass(frozen=True, eq=False)
class CovEstimate:
    mean: np.ndarray
    cov: np.ndarray
    method: LLC_BACKEND
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class McdConfig:
    alpha: float = defaults.MCD_ALPHA
    n_starts: int = defaults.MCD_N_STARTS
    max_csteps: int = defaults.MCD_MAX_CSTEPS
    keep_best: int = defaults.MCD_KEEP_BEST
    exhaustive_limit: int = defaults.MCD_EXHAUSTIVE_LIMIT
    reweight: bool = False

    def __post_init__(self) -> None:
        if not 0.5 <= self.alpha <= 1.0:
            raise ValueError(f"MCD alpha must lie in [0.5, 1], got {self.alpha}")
        if self.n_starts < 1 or self.max_csteps < 1 or self.keep_best < 1:
            raise ValueError("MCD iteration counts must be positive")


@dataclass(frozen=True)
class GdeConfig:
    gamma: float = defaults.GDE_GAMMA
    tol: float = defaults.GDE_TOL
    max_iter: int = defaults.GDE_MAX_ITER
    init: LLC_BACKEND = LLC_BACKEND.SCM

    def __post_init__(self) -> None:
        object.__setattr__(self, "init", LLC_BACKEND.parse(self.init))
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.init not in (LLC_BACKEND.SCM, LLC_BACKEND.MCD):
            raise ValueError("GDE init must be SCM or MCD")


@dataclass(frozen=True)
class TotalEffect:
    u: int
    i: int
    k: int
    value: float


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    T: np.ndarray
    t: np.ndarray
    col_index: tuple[tuple[int, int], ...]
    row_index: tuple[tuple[int, int, int], ...]
    d: int

    def block_rows(self, u: int) -> np.ndarray:
        return np.array([r for r, (ru, _, _) in enumerate(self.row_index) if ru == u], dtype=int)

    def block_cols(self, u: int) -> np.ndarray:
        return np.array([c for c, (cu, _) in enumerate(self.col_index) if cu == u], dtype=int)


@dataclass(frozen=True, eq=False)
class LlcEstimate:
    B_hat: np.ndarray
    SigmaE_hat: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class BenchmarkConfig:
    n_models: int = defaults.N_MODELS
    d: int = defaults.N_NODES
    n: int = defaults.SAMPLE_SIZE
    edge_prob: float = defaults.EDGE_PROB
    conf_prob: float = defaults.CONF_PROB
    epsilons: tuple[float, ...] = defaults.EPSILONS
    estimators: tuple[LLC_BACKEND, ...] = (LLC_BACKEND.SCM, LLC_BACKEND.MCD, LLC_BACKEND.GDE)
    mcd: McdConfig = field(default_factory=lambda: McdConfig(alpha=defaults.BENCH_MCD_ALPHA))
    gde: GdeConfig = field(default_factory=GdeConfig)
    target: LLC_TARGET = LLC_TARGET.X
    outlier_location: float = defaults.OUTLIER_LOCATION
    outlier_scale: float = defaults.OUTLIER_SCALE
    ridge: float = 0.0
    master_seed: int = defaults.MASTER_SEED

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        object.__setattr__(self, "estimators", tuple(LLC_BACKEND.parse(b) for b in self.estimators))
        object.__setattr__(self, "target", LLC_TARGET.parse(self.target))
        if self.n_models < 1:
            raise ValueError("n_models must be at least 1")
        if any(not 0.0 <= e < 1.0 for e in self.epsilons):
            raise ValueError(f"epsilons must lie in [0, 1), got {self.epsilons}")
        if self.d < 2 or self.n < 2:
            raise ValueError("d and n must be at least 2")

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["estimators"] = [b.value for b in self.estimators]
        out["target"] = self.target.value
        out["epsilons"] = list(self.epsilons)
        out["gde"]["init"] = self.gde.init.value
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any], **overrides: Any) -> "BenchmarkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown benchmark config keys: {', '.join(sorted(unknown))}")
        values = dict(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if isinstance(values.get("mcd"), dict):
            values["mcd"] = McdConfig(**values["mcd"])
        if isinstance(values.get("gde"), dict):
            values["gde"] = GdeConfig(**values["gde"])
        for key in ("epsilons", "estimators"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    @classmethod
    def from_json(cls, path: str | Path, **overrides: Any) -> "BenchmarkConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f), **overrides)


@dataclass(frozen=True)
class BenchmarkRecord:
    model_id: int
    estimator: LLC_BACKEND
    epsilon: float
    rfe_b: float
    rfe_sigma_e: float
    runtime: float
    flag: LLC_FLAG = LLC_FLAG.NONE

    CSV_HEADER: ClassVar[tuple[str, ...]] = (
        "model_id", "estimator", "epsilon", "rfe_b", "rfe_sigma_e", "flag",
    )


@dataclass(frozen=True)
class AggregateRow:
    estimator: LLC_BACKEND
    epsilon: float
    target: str
    median: float
    mad: float
    count: int


@dataclass(frozen=True)
class PValueRow:
    epsilon: float
    target: str
    estimator_a: LLC_BACKEND
    estimator_b: LLC_BACKEND
    p_value: float


@dataclass
class BenchmarkReport:
    config: BenchmarkConfig
    records: list[BenchmarkRecord] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    pvalues: list[PValueRow] = field(default_factory=list)

    TARGETS: ClassVar[tuple[str, str]] = ("B", "SigmaE")

    def aggregate_table(self, target: str) -> dict[tuple[LLC_BACKEND, float], AggregateRow]:
        return {(a.estimator, a.epsilon): a for a in self.aggregates if a.target == target}
