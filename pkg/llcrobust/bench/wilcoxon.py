from __future__ import annotations

import numpy as np
from scipy import stats

EXACT_MAX_N = 25


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    # midranks are multiples of 1/2; doubling makes every rank an integer
    doubled = np.rint(2 * ranks).astype(int)
    w = int(round(2 * w_plus))
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    counts /= counts.sum()
    lower = counts[: w + 1].sum()
    upper = counts[w:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def _normal_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(var)
    return float(min(1.0, 2.0 * stats.norm.sf(z)))


def wilcoxon_signed_rank(a, b) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are dropped and tied magnitudes get midranks. The null
    distribution is enumerated exactly for up to 25 nonzero differences and
    approximated by a continuity-corrected normal above that.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    if a.size < 5:
        raise ValueError("need at least 5 pairs")

    diff = a - b
    diff = diff[diff != 0]
    if diff.size == 0:
        return 1.0
    ranks = stats.rankdata(np.abs(diff))
    w_plus = float(ranks[diff > 0].sum())
    if diff.size <= EXACT_MAX_N:
        return _exact_two_sided(ranks, w_plus)
    return _normal_two_sided(ranks, w_plus)
