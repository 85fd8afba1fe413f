from __future__ import annotations

import numpy as np
from scipy import linalg

from llcrobust.interface.llc_structs import Sample

COV_SYM_TOL = 1e-10
COV_PSD_TOL = -1e-8


class DegenerateDataError(ValueError):
    """Raised when data cannot support a nonsingular scatter estimate."""


def as_data(sample: Sample | np.ndarray) -> np.ndarray:
    data = sample.data if isinstance(sample, Sample) else np.asarray(sample, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    return data


def mean_and_scatter(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and the (n-1)-normalized covariance."""
    n = data.shape[0]
    if n < 2:
        raise DegenerateDataError("need at least two observations")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (n - 1)
    return mean, 0.5 * (cov + cov.T)


def log_det(cov: np.ndarray) -> float:
    """log|cov|, -inf for singular matrices."""
    sign, value = np.linalg.slogdet(cov)
    if sign <= 0:
        return -np.inf
    return float(value)


def mahalanobis_sq(data: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Squared Mahalanobis distances of every row of `data`."""
    try:
        factor = linalg.cho_factor(cov, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise DegenerateDataError("scatter matrix is not positive definite") from exc
    centered = np.asarray(data, dtype=float) - mean
    solved = linalg.cho_solve(factor, centered.T, check_finite=False)
    return np.einsum("ij,ji->i", centered, solved)


def is_valid_scatter(cov: np.ndarray) -> bool:
    if not np.allclose(cov, cov.T, rtol=0.0, atol=COV_SYM_TOL):
        return False
    return bool(np.linalg.eigvalsh(0.5 * (cov + cov.T)).min() >= COV_PSD_TOL)
