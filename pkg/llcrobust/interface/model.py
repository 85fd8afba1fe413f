"""Linear cyclic causal models with confounders, experiment designs and
population-level oracles.

All node indices are 0-based here; file I/O converts to 1-based.
"""
from __future__ import annotations

import logging

import numpy as np

from llcrobust import bench_settings as defaults
from llcrobust.interface.llc_structs import (
    CausalModel,
    Experiment,
    ExperimentDesign,
    InterventionSpec,
    ValidationReport,
)
from llcrobust.utils import selector, symmetrize

log = logging.getLogger(__name__)


class NotWeaklyStableError(np.linalg.LinAlgError):
    """Raised when I - U_k B is not invertible for an experiment."""


class ModelGenerationError(RuntimeError):
    """Raised when no admissible random model was found within max_attempts draws."""


def validate_model(model: CausalModel, eig_tol: float = defaults.PSD_EIG_TOL) -> ValidationReport:
    violations: list[str] = []
    diag = np.diag(model.B)
    if np.any(diag != 0.0):
        nodes = [int(i) + 1 for i in np.flatnonzero(diag != 0.0)]
        violations.append(f"nonzero diagonal of B at nodes {nodes}")
    S = model.SigmaE
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-12):
        violations.append("SigmaE not symmetric")
    min_eig = float(np.linalg.eigvalsh(symmetrize(S)).min())
    if min_eig < -eig_tol:
        violations.append(f"SigmaE not PSD (min eigenvalue {min_eig:.6g})")
    if not (np.all(np.isfinite(model.B)) and np.all(np.isfinite(S))):
        violations.append("non-finite entries")
    return ValidationReport(violations=tuple(violations))


def experiment_matrices(exp: Experiment, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the selector matrices (J_k, U_k); J_k + U_k = I."""
    return selector(exp.J, d), selector(exp.U, d)


def _system_matrix(model: CausalModel, exp: Experiment) -> np.ndarray:
    _, U = experiment_matrices(exp, model.d)
    return np.eye(model.d) - U @ model.B


def _is_invertible(M: np.ndarray) -> bool:
    if abs(np.linalg.det(M)) <= defaults.DET_TOL:
        return False
    return bool(np.linalg.cond(M) < defaults.COND_LIMIT)


def weakly_stable(model: CausalModel, exp: Experiment) -> bool:
    return _is_invertible(_system_matrix(model, exp))


def design_weakly_stable(model: CausalModel, design: ExperimentDesign) -> bool:
    return all(weakly_stable(model, exp) for exp in design.experiments)


def experiment_inverse(model: CausalModel, exp: Experiment) -> np.ndarray:
    """(I - U_k B)^{-1}, raising NotWeaklyStableError when it does not exist."""
    M = _system_matrix(model, exp)
    if not _is_invertible(M):
        raise NotWeaklyStableError(f"I - U B is not invertible for experiment {exp.label()}")
    return np.linalg.inv(M)


def single_intervention_design(d: int) -> ExperimentDesign:
    if d < 2:
        raise ValueError("need at least two nodes")
    sets = [()] + [(k,) for k in range(d)]
    return ExperimentDesign.from_intervention_sets(sets, d)


def pair_condition(design: ExperimentDesign, d: int) -> bool:
    covered = np.zeros((d, d), dtype=bool)
    for exp in design.experiments:
        if exp.J and exp.U:
            covered[np.ix_(exp.J, exp.U)] = True
    np.fill_diagonal(covered, True)
    return bool(covered.all())


def confounder_pairs(model: CausalModel, tol: float = 0.0) -> list[tuple[int, int]]:
    S = model.SigmaE
    return [
        (i, j)
        for i in range(model.d)
        for j in range(i + 1, model.d)
        if abs(S[i, j]) > tol
    ]


def _signed_uniform(rng: np.random.Generator, bounds: tuple[float, float], size) -> np.ndarray:
    lo, hi = bounds
    magnitude = rng.uniform(lo, hi, size=size)
    sign = rng.choice((-1.0, 1.0), size=size)
    return sign * magnitude


def _draw_sigma_e(d: int, conf_mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    variances = rng.uniform(*defaults.NOISE_VARIANCE_RANGE, size=d)
    S = np.diag(variances)
    rho = _signed_uniform(rng, defaults.CONFOUNDER_CORR_RANGE, size=(d, d))
    for i in range(d):
        for j in range(i + 1, d):
            if conf_mask[i, j]:
                S[i, j] = S[j, i] = rho[i, j] * np.sqrt(variances[i] * variances[j])
    eigval, eigvec = np.linalg.eigh(S)
    if eigval.min() < defaults.PSD_CLIP:
        log.debug("clipping SigmaE eigenvalues (min %.4g)", eigval.min())
        S = symmetrize(eigvec @ np.diag(np.maximum(eigval, defaults.PSD_CLIP)) @ eigvec.T)
    return S


def random_model(
    d: int,
    edge_prob: float,
    conf_prob: float,
    rng: np.random.Generator,
    *,
    max_attempts: int = defaults.MAX_GENERATION_ATTEMPTS,
) -> CausalModel:
    """Draw a random weakly stable model.

    The edge and confounder structure is drawn once; edge weights are redrawn
    until the model is weakly stable under the single-intervention design and
    the spectral radius of B is below MAX_SPECTRAL_RADIUS.
    """
    if d < 2:
        raise ValueError("need at least two nodes")
    if not (0.0 <= edge_prob <= 1.0 and 0.0 <= conf_prob <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")

    offdiag = ~np.eye(d, dtype=bool)
    edge_mask = (rng.random((d, d)) < edge_prob) & offdiag
    conf_mask = np.triu(rng.random((d, d)) < conf_prob, k=1)
    SigmaE = _draw_sigma_e(d, conf_mask, rng)
    design = single_intervention_design(d)

    for attempt in range(1, max_attempts + 1):
        B = np.where(edge_mask, _signed_uniform(rng, defaults.EDGE_WEIGHT_RANGE, (d, d)), 0.0)
        model = CausalModel(d=d, B=B, SigmaE=SigmaE)
        radius = float(np.max(np.abs(np.linalg.eigvals(B)))) if d else 0.0
        if radius < defaults.MAX_SPECTRAL_RADIUS and design_weakly_stable(model, design):
            if attempt > 1:
                log.debug("random model accepted after %d attempts", attempt)
            return model

    raise ModelGenerationError(
        f"no weakly stable model after {max_attempts} attempts "
        f"(d={d}, edges={int(edge_mask.sum())}, edge_prob={edge_prob})"
    )


def population_covariance(
    model: CausalModel,
    exp: Experiment,
    spec: InterventionSpec | None = None,
) -> np.ndarray:
    spec = spec or InterventionSpec()
    d = model.d
    A = experiment_inverse(model, exp)
    J, U = experiment_matrices(exp, d)
    middle = U @ model.SigmaE @ U + J @ spec.covariance(d, exp.J) @ J
    return symmetrize(A @ middle @ A.T)


def population_total_effects(
    model: CausalModel,
    exp: Experiment,
    spec: InterventionSpec | None = None,
) -> np.ndarray:
    """T^k = (U_k (I - U_k B)^{-1} J_k SigmaC J_k) restricted to rows U_k, columns J_k."""
    if exp.is_observational:
        raise ValueError("total effects need at least one intervened node")
    spec = spec or InterventionSpec()
    d = model.d
    A = experiment_inverse(model, exp)
    J, U = experiment_matrices(exp, d)
    full = U @ A @ J @ spec.covariance(d, exp.J) @ J
    return full[np.ix_(exp.U, exp.J)]
