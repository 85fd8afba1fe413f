"""The LLC estimator.

Pipeline: covariance per experiment -> total effects -> block-diagonal
constraint system t = T b -> direct effects B -> disturbance covariance.
"""
from __future__ import annotations

import logging
from typing import Any, Sequence

import numpy as np
from scipy import linalg

from llcrobust import bench_settings as defaults
from llcrobust.covest import estimate_covariance
from llcrobust.interface.llc_structs import (
    CausalModel,
    ConstraintSystem,
    CovEstimate,
    Experiment,
    ExperimentDesign,
    GdeConfig,
    LlcEstimate,
    McdConfig,
    Sample,
    TotalEffect,
)
from llcrobust.interface.model import pair_condition
from llcrobust.llc_enums import LLC_BACKEND, LLC_FLAG
from llcrobust.utils import offdiag_column, offdiag_pairs, symmetrize, unflatten_offdiag

log = logging.getLogger(__name__)


class DesignError(ValueError):
    """Raised for designs or inputs LLC cannot use."""


class BackendError(RuntimeError):
    """A covariance back end failed on one experiment."""

    def __init__(self, k: int, backend: LLC_BACKEND, cause: Exception) -> None:
        super().__init__(f"{backend.value} failed on experiment {k}: {cause}")
        self.k = k
        self.backend = backend
        self.cause = cause


def _cov_matrix(cov: CovEstimate | np.ndarray) -> np.ndarray:
    return cov.cov if isinstance(cov, CovEstimate) else np.asarray(cov, dtype=float)


def extract_total_effects(cov: CovEstimate | np.ndarray, exp: Experiment, k: int = 0) -> list[TotalEffect]:
    C = _cov_matrix(cov)
    if C.shape != (exp.d, exp.d):
        raise DesignError(f"covariance is {C.shape}, experiment has {exp.d} nodes")
    return [TotalEffect(u=u, i=i, k=k, value=float(C[u, i])) for u in exp.U for i in exp.J]


def assemble_constraints(
    effects: Sequence[TotalEffect],
    design: ExperimentDesign,
    d: int,
) -> ConstraintSystem:
    lookup = {(e.k, e.u, e.i): e.value for e in effects}
    ordered = sorted(effects, key=lambda e: (e.u, e.k, e.i))
    columns = offdiag_pairs(d)

    T = np.zeros((len(ordered), len(columns)))
    t = np.zeros(len(ordered))
    rows: list[tuple[int, int, int]] = []
    for r, eff in enumerate(ordered):
        if not 0 <= eff.k < design.K:
            raise DesignError(f"effect refers to unknown experiment {eff.k}")
        exp = design.experiments[eff.k]
        if eff.u not in exp.U or eff.i not in exp.J:
            raise DesignError(f"effect ({eff.u}, {eff.i}) is not a total effect of experiment {eff.k}")
        t[r] = eff.value
        T[r, offdiag_column(eff.u, eff.i, d)] = 1.0
        for u2 in exp.U:
            if u2 == eff.u:
                continue
            try:
                T[r, offdiag_column(eff.u, u2, d)] = lookup[(eff.k, u2, eff.i)]
            except KeyError as exc:
                raise DesignError(
                    f"missing total effect of node {eff.i + 1} on node {u2 + 1} in experiment {eff.k}"
                ) from exc
        rows.append((eff.u, eff.i, eff.k))

    return ConstraintSystem(T=T, t=t, col_index=columns, row_index=tuple(rows), d=d)


def _block(system: ConstraintSystem, u: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = system.block_rows(u)
    cols = system.block_cols(u)
    return system.T[np.ix_(rows, cols)], system.t[rows], cols


def _pinv_solve(A: np.ndarray, y: np.ndarray, cutoff: float) -> tuple[np.ndarray, int]:
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > cutoff
    return Vt[keep].T @ ((U[:, keep].T @ y) / s[keep]), int(keep.sum())


def solve_blocks(system: ConstraintSystem, lam: float = 0.0) -> tuple[np.ndarray, dict[str, Any]]:
    """Flat b and solver info. Without ridge, singular values at or below
    PINV_RCOND * sigma_max(T) are dropped in every block."""
    if lam < 0:
        raise ValueError("ridge parameter must be nonnegative")
    b = np.zeros(len(system.col_index))
    cutoff = defaults.PINV_RCOND * np.linalg.norm(system.T, 2) if system.T.size else 0.0
    ranks: dict[int, int] = {}
    for u in range(system.d):
        A, y, cols = _block(system, u)
        if A.shape[0] == 0:
            ranks[u] = 0
            continue
        if lam > 0:
            gram = A.T @ A + lam * np.eye(A.shape[1])
            b[cols] = linalg.solve(gram, A.T @ y, assume_a="pos")
            ranks[u] = A.shape[1]
        else:
            b[cols], ranks[u] = _pinv_solve(A, y, cutoff)
    info = {
        "solver": "ridge" if lam > 0 else "pinv",
        "ridge": lam,
        "pinv_cutoff": float(cutoff),
        "block_ranks": ranks,
        "rank_deficient": any(r < system.d - 1 for r in ranks.values()),
        "residual_norm": float(np.linalg.norm(system.T @ b - system.t)),
    }
    return b, info


def solve_b(system: ConstraintSystem, lam: float = 0.0) -> np.ndarray:
    b, _ = solve_blocks(system, lam)
    return unflatten_offdiag(b, system.d)


def condition_diagnostics(system: ConstraintSystem, limit: float = defaults.BLOCK_COND_FLAG) -> dict[str, Any]:
    conditions: dict[int, float] = {}
    for u in range(system.d):
        A, _, _ = _block(system, u)
        if A.shape[0] < A.shape[1]:
            conditions[u] = float("inf")
            continue
        s = np.linalg.svd(A, compute_uv=False)
        conditions[u] = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    worst = max(conditions.values()) if conditions else 1.0
    return {
        "block_conditions": conditions,
        "max_condition": worst,
        "ill_conditioned": bool(worst > limit),
    }


def diagnostic_flag(diagnostics: dict[str, Any]) -> LLC_FLAG:
    """Most severe solver condition recorded in an estimate's diagnostics."""
    if diagnostics.get("ill_conditioned"):
        return LLC_FLAG.ILL_CONDITIONED
    if diagnostics.get("rank_deficient"):
        return LLC_FLAG.RANK_DEFICIENT
    if not diagnostics.get("gde_converged", True):
        return LLC_FLAG.NOT_CONVERGED
    return LLC_FLAG.NONE


def estimate_sigma_e(B_hat: np.ndarray, cov0: CovEstimate | np.ndarray) -> np.ndarray:
    d = B_hat.shape[0]
    M = np.eye(d) - B_hat
    return symmetrize(M @ _cov_matrix(cov0) @ M.T)


def _check_design(design: ExperimentDesign) -> int:
    if not pair_condition(design, design.d):
        raise DesignError("design violates the pair condition")
    k0 = design.observational_index
    if k0 is None:
        raise DesignError("design has no purely observational experiment")
    return k0


def llc_fit_covariances(
    covs: Sequence[CovEstimate | np.ndarray],
    design: ExperimentDesign,
    lam: float = 0.0,
) -> LlcEstimate:
    """LLC from one covariance per experiment, in design order."""
    k0 = _check_design(design)
    if len(covs) != design.K:
        raise DesignError(f"expected {design.K} covariances, got {len(covs)}")

    effects: list[TotalEffect] = []
    for k, (cov, exp) in enumerate(zip(covs, design.experiments)):
        if not exp.is_observational:
            effects.extend(extract_total_effects(cov, exp, k))

    system = assemble_constraints(effects, design, design.d)
    b, info = solve_blocks(system, lam)
    B_hat = unflatten_offdiag(b, design.d)
    SigmaE_hat = estimate_sigma_e(B_hat, covs[k0])

    diagnostics = dict(info)
    diagnostics.update(condition_diagnostics(system))
    if diagnostics["ill_conditioned"]:
        log.debug("constraint system ill-conditioned (max cond %.3g)", diagnostics["max_condition"])
    return LlcEstimate(B_hat=B_hat, SigmaE_hat=SigmaE_hat, diagnostics=diagnostics)


def llc_fit(
    samples: Sequence[Sample],
    design: ExperimentDesign,
    backend: LLC_BACKEND | str = LLC_BACKEND.SCM,
    *,
    mcd_cfg: McdConfig | None = None,
    gde_cfg: GdeConfig | None = None,
    lam: float = 0.0,
    rng: np.random.Generator | None = None,
) -> LlcEstimate:
    backend = LLC_BACKEND.parse(backend)
    _check_design(design)
    if len(samples) != design.K:
        raise DesignError(f"expected one sample per experiment ({design.K}), got {len(samples)}")
    for k, (sample, exp) in enumerate(zip(samples, design.experiments)):
        if sample.experiment != exp:
            raise DesignError(f"sample {k} belongs to {sample.experiment.label()}, expected {exp.label()}")

    rng = rng if rng is not None else np.random.default_rng(0)
    children = rng.spawn(design.K)
    covs: list[CovEstimate] = []
    for k, sample in enumerate(samples):
        try:
            covs.append(
                estimate_covariance(sample, backend, mcd_cfg=mcd_cfg, gde_cfg=gde_cfg, rng=children[k])
            )
        except Exception as exc:
            raise BackendError(k, backend, exc) from exc

    estimate = llc_fit_covariances(covs, design, lam)
    estimate.diagnostics["backend"] = backend.value
    if backend is LLC_BACKEND.GDE:
        estimate.diagnostics["gde_converged"] = all(c.meta.get("converged", True) for c in covs)
    return estimate


def relabel_model(model: CausalModel, perm: Sequence[int]) -> CausalModel:
    """Model with node perm[k] renamed to k."""
    P = np.eye(model.d)[list(perm)]
    return CausalModel(d=model.d, B=P @ model.B @ P.T, SigmaE=P @ model.SigmaE @ P.T)
