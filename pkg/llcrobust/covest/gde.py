"""Gamma-divergence estimation of a multivariate normal location/scatter.

The fixed point below minimizes the empirical gamma cross-entropy

    -1/g * log(1/n * sum_i phi(x_i)^g) + 1/(1+g) * log int phi^(1+g) dx

and decreases it monotonically (concave-convex procedure).
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import multivariate_normal

from llcrobust.covest.generics import DegenerateDataError, as_data, log_det
from llcrobust.covest.mcd import mcd
from llcrobust.covest.scm import scm
from llcrobust.interface.llc_structs import CovEstimate, GdeConfig, McdConfig, Sample
from llcrobust.llc_enums import LLC_BACKEND

log = logging.getLogger(__name__)

# relative slack before an objective increase counts as a failed descent
_DESCENT_SLACK = 1e-10


def _log_density(data: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    try:
        values = multivariate_normal.logpdf(data, mean=mean, cov=cov, allow_singular=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DegenerateDataError("GDE scatter matrix became singular") from exc
    return np.atleast_1d(values)


def _objective(log_density: np.ndarray, ld: float, gamma: float, d: int) -> float:
    n = log_density.shape[0]
    empirical = -(logsumexp(gamma * log_density) - np.log(n)) / gamma
    # log int phi^(1+g) = -d/2 log(1+g) - d*g/2 log(2 pi) - g/2 log|S|
    log_integral = -0.5 * d * np.log1p(gamma) - 0.5 * d * gamma * np.log(2 * np.pi) - 0.5 * gamma * ld
    return float(empirical + log_integral / (1.0 + gamma))


def gamma_objective(
    sample: Sample | np.ndarray,
    mean: np.ndarray,
    cov: np.ndarray,
    gamma: float,
) -> float:
    data = as_data(sample)
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    ld = log_det(cov)
    if not np.isfinite(ld):
        raise DegenerateDataError("gamma objective needs a positive definite covariance")
    return _objective(_log_density(data, mean, cov), ld, gamma, data.shape[1])


def _iterate(
    data: np.ndarray,
    mean: np.ndarray,
    cov: np.ndarray,
    cfg: GdeConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float], bool, bool]:
    gamma = cfg.gamma
    d = data.shape[1]
    if not np.isfinite(log_det(cov)):
        raise DegenerateDataError("GDE needs a nonsingular initial scatter")
    lp = _log_density(data, mean, cov)
    trace = [_objective(lp, log_det(cov), gamma, d)]
    weights = softmax(gamma * lp)
    converged = False
    monotone = True
    for _ in range(cfg.max_iter):
        weights = softmax(gamma * lp)
        new_mean = weights @ data
        centered = data - new_mean
        new_cov = (1.0 + gamma) * (centered.T * weights) @ centered
        new_cov = 0.5 * (new_cov + new_cov.T)
        ld = log_det(new_cov)
        if not np.isfinite(ld):
            raise DegenerateDataError("GDE scatter matrix became singular")

        change = max(np.max(np.abs(new_mean - mean)), np.max(np.abs(new_cov - cov)))
        mean, cov = new_mean, new_cov
        lp = _log_density(data, mean, cov)
        trace.append(_objective(lp, ld, gamma, d))
        if trace[-1] > trace[-2] + _DESCENT_SLACK * max(1.0, abs(trace[-2])):
            monotone = False
        if change < cfg.tol:
            converged = True
            break
    return mean, cov, weights, trace, converged, monotone


def gde(
    sample: Sample | np.ndarray,
    cfg: GdeConfig | None = None,
    rng: np.random.Generator | None = None,
    mcd_cfg: McdConfig | None = None,
) -> CovEstimate:
    cfg = cfg or GdeConfig()
    data = as_data(sample)
    n, d = data.shape
    if n <= d:
        raise DegenerateDataError(f"GDE needs n > d (n={n}, d={d})")

    def _start(init: LLC_BACKEND) -> CovEstimate:
        if init is LLC_BACKEND.MCD:
            return mcd(data, mcd_cfg, rng)
        return scm(data)

    init = cfg.init
    restarted = False
    while True:
        start = _start(init)
        try:
            mean, cov, weights, trace, converged, monotone = _iterate(data, start.mean, start.cov, cfg)
        except DegenerateDataError:
            if init is LLC_BACKEND.MCD:
                raise
            log.debug("GDE from %s hit a singular scatter; restarting from MCD", init.value)
            init, restarted = LLC_BACKEND.MCD, True
            continue
        if monotone or init is LLC_BACKEND.MCD:
            break
        log.debug("GDE objective increased from %s start; restarting from MCD", init.value)
        init, restarted = LLC_BACKEND.MCD, True

    if not converged:
        log.debug("GDE stopped after %d iterations without converging", len(trace) - 1)
    meta = {
        "gamma": cfg.gamma,
        "weights": weights,
        "n_iter": len(trace) - 1,
        "objective": trace[-1],
        "objective_trace": trace,
        "converged": converged,
        "init": init.value,
        "restarted": restarted,
    }
    return CovEstimate(mean=mean, cov=cov, method=LLC_BACKEND.GDE, meta=meta)
