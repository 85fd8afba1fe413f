"""Minimum Covariance Determinant estimator.

Exhaustive search over h-subsets when that is affordable, otherwise the
FAST-MCD scheme: random (d+1)-subsets expanded to h points and refined by
C-steps.
"""
from __future__ import annotations

import itertools
import logging
import math

import numpy as np
from scipy.stats import chi2

from llcrobust import bench_settings as defaults
from llcrobust.covest.generics import (
    DegenerateDataError,
    as_data,
    log_det,
    mahalanobis_sq,
    mean_and_scatter,
)
from llcrobust.interface.llc_structs import CovEstimate, McdConfig, Sample
from llcrobust.llc_enums import LLC_BACKEND

log = logging.getLogger(__name__)

_EXHAUSTIVE_CHUNK = 4096


def mcd_h(n: int, d: int, alpha: float) -> int:
    if alpha == 0.5:
        return (n + d + 1) // 2
    return min(n, int(math.ceil(alpha * n - 1e-9)))


def mcd_max_breakdown(n: int, d: int) -> float:
    return ((n - d) // 2) / n


def mcd_consistency_factor(h: int, n: int, d: int) -> float:
    """(h/n) / P(chi2_{d+2} <= q), q the chi2_d quantile at h/n; 1 for the full set."""
    if h >= n:
        return 1.0
    q = chi2.ppf(h / n, d)
    return float((h / n) / chi2.cdf(q, d + 2))


def _subset_logdets(data: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    X = data[subsets]
    h = subsets.shape[1]
    centered = X - X.mean(axis=1, keepdims=True)
    covs = np.einsum("mki,mkj->mij", centered, centered) / (h - 1)
    sign, values = np.linalg.slogdet(covs)
    return np.where(sign > 0, values, np.inf)


def _mcd_exhaustive(data: np.ndarray, h: int) -> tuple[np.ndarray, float]:
    n = data.shape[0]
    combos = itertools.combinations(range(n), h)
    best_value, best_subset = np.inf, None
    while True:
        chunk = np.array(list(itertools.islice(combos, _EXHAUSTIVE_CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        values = _subset_logdets(data, chunk)
        j = int(np.argmin(values))
        if values[j] < best_value:
            best_value, best_subset = float(values[j]), chunk[j]
    if best_subset is None:
        raise DegenerateDataError("every h-subset has a singular covariance")
    return best_subset, best_value


def c_step(sample: Sample | np.ndarray, subset) -> np.ndarray:
    """Keep the h points closest, in Mahalanobis distance, to the subset's mean/cov."""
    data = as_data(sample)
    subset = np.sort(np.asarray(subset, dtype=int))
    mean, cov = mean_and_scatter(data[subset])
    d2 = mahalanobis_sq(data, mean, cov)
    return np.sort(np.argsort(d2, kind="stable")[: subset.size])


def _refine(data: np.ndarray, subset: np.ndarray, max_steps: int) -> tuple[np.ndarray, float, int]:
    current = np.sort(subset)
    current_ld = log_det(mean_and_scatter(data[current])[1])
    steps = 0
    for steps in range(1, max_steps + 1):
        nxt = c_step(data, current)
        nxt_ld = log_det(mean_and_scatter(data[nxt])[1])
        if np.array_equal(nxt, current) or nxt_ld >= current_ld - 1e-12:
            if nxt_ld < current_ld:
                current, current_ld = nxt, nxt_ld
            break
        current, current_ld = nxt, nxt_ld
    return current, current_ld, steps


def _initial_subset(data: np.ndarray, h: int, rng: np.random.Generator) -> np.ndarray:
    n, d = data.shape
    order = rng.permutation(n)
    size = d + 1
    while True:
        idx = order[:size]
        mean, cov = mean_and_scatter(data[idx])
        if np.isfinite(log_det(cov)):
            break
        if size >= n:
            raise DegenerateDataError("no nonsingular starting subset")
        size += 1
    d2 = mahalanobis_sq(data, mean, cov)
    return np.sort(np.argsort(d2, kind="stable")[:h])


def _mcd_fast(data: np.ndarray, h: int, cfg: McdConfig, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    candidates: list[tuple[float, np.ndarray]] = []
    for _ in range(cfg.n_starts):
        try:
            subset = _initial_subset(data, h, rng)
            subset, value, _ = _refine(data, subset, 2)
        except DegenerateDataError:
            continue
        if np.isfinite(value):
            candidates.append((value, subset))
    if not candidates:
        raise DegenerateDataError("all MCD starting subsets are singular")

    candidates.sort(key=lambda item: item[0])
    best_value, best_subset = np.inf, None
    for value, subset in candidates[: cfg.keep_best]:
        try:
            subset, value, steps = _refine(data, subset, cfg.max_csteps)
        except DegenerateDataError:
            continue
        log.debug("C-steps=%d log|S|=%.6g", steps, value)
        if value < best_value:
            best_value, best_subset = value, subset
    if best_subset is None:
        raise DegenerateDataError("MCD refinement reached only singular subsets")
    return best_subset, best_value


def mcd(
    sample: Sample | np.ndarray,
    cfg: McdConfig | None = None,
    rng: np.random.Generator | None = None,
) -> CovEstimate:
    cfg = cfg or McdConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    data = as_data(sample)
    n, d = data.shape
    h = mcd_h(n, d, cfg.alpha)
    if n <= d or h <= d:
        raise DegenerateDataError(f"MCD needs n > d and h > d (n={n}, d={d}, h={h})")

    exhaustive = math.comb(n, h) <= cfg.exhaustive_limit
    if exhaustive:
        subset, value = _mcd_exhaustive(data, h)
    else:
        subset, value = _mcd_fast(data, h, cfg, rng)

    mean, cov = mean_and_scatter(data[subset])
    factor = mcd_consistency_factor(h, n, d)
    cov = cov * factor
    meta = {
        "h": h,
        "subset": subset.tolist(),
        "log_det": value,
        "exhaustive": exhaustive,
        "consistency_factor": factor,
    }

    if cfg.reweight and h < n:
        cutoff = chi2.ppf(defaults.MCD_REWEIGHT_QUANTILE, d)
        keep = np.flatnonzero(mahalanobis_sq(data, mean, cov) <= cutoff)
        if keep.size > d:
            mean, cov = mean_and_scatter(data[keep])
            cov = cov * mcd_consistency_factor(keep.size, n, d)
            meta["reweighted"] = keep.tolist()

    return CovEstimate(mean=mean, cov=cov, method=LLC_BACKEND.MCD, meta=meta)
