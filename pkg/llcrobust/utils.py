from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def symmetrize(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def selector(indices: Iterable[int], d: int) -> np.ndarray:
    """diag(indices): the d x d 0/1 diagonal matrix selecting `indices`."""
    S = np.zeros((d, d))
    idx = list(indices)
    if idx:
        S[idx, idx] = 1.0
    return S


def offdiag_pairs(d: int) -> tuple[tuple[int, int], ...]:
    # row-major order, diagonal skipped
    return tuple((u, j) for u in range(d) for j in range(d) if j != u)


def offdiag_column(u: int, j: int, d: int) -> int:
    if u == j:
        raise ValueError("diagonal entries have no column")
    return u * (d - 1) + (j if j < u else j - 1)


def flatten_offdiag(B: np.ndarray) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    return B[~np.eye(B.shape[0], dtype=bool)]


def unflatten_offdiag(b: np.ndarray, d: int) -> np.ndarray:
    B = np.zeros((d, d))
    B[~np.eye(d, dtype=bool)] = np.asarray(b, dtype=float)
    return B


def derive_rng(*keys: int) -> np.random.Generator:
    """Independent generator for a tuple of integer keys, stable across schedules."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def to_one_based(indices: Sequence[int]) -> list[int]:
    return [int(i) + 1 for i in indices]


def to_zero_based(indices: Sequence[int], d: int) -> list[int]:
    out = []
    for i in indices:
        i = int(i)
        if not 1 <= i <= d:
            raise ValueError(f"node index {i} out of range 1..{d}")
        out.append(i - 1)
    return out
