"""Shared linear-algebra helpers built on numpy's SVD."""

from __future__ import annotations

import numpy as np

# Relative cutoff used by every pseudo-inverse in the library. On empirical
# Hankel blocks this cutoff is the de-facto regularizer of the learners.
PINV_RTOL = 1e-10


def pinv(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with the library-wide relative cutoff."""
    return np.linalg.pinv(m, rcond=PINV_RTOL)


def svdvals(m: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def nuclear_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.sum(svdvals(m)))


def fix_signs(v: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive.

    Makes singular-vector matrices reproducible across runs; any function
    computed from them is invariant to the convention.
    """
    v = np.array(v, dtype=float)
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    flip = v[idx, np.arange(v.shape[1])] < 0
    v[:, flip] *= -1.0
    return v


def top_right_singular_vectors(m: np.ndarray, n: int) -> np.ndarray:
    """Columns are the right singular vectors of the n largest singular
    values, in descending order, with the fix_signs convention applied.

    Requires 1 <= n <= min(m.shape).
    """
    _, _, vt = np.linalg.svd(np.asarray(m, dtype=float), full_matrices=False)
    return fix_signs(vt[:n].T)
