"""Rank, nullspace and row-space helpers with explicit thresholds.

Rank claims are the backbone of every exactness audit, so thresholds are
relative to the largest singular value (default 1e-10) and an exact rational
elimination is available to certify borderline decisions on reference cells.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg

DEFAULT_RTOL = 1e-10


def svd_rank(M, rtol: float = DEFAULT_RTOL, scale: float | None = None) -> int:
    """Numerical rank; pass the source operator's scale when M may be zero.

    With only a relative threshold a numerically-zero matrix would count its
    rounding noise as full rank.
    """
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = scale if scale is not None else float(s[0])
    if ref == 0.0:
        return 0
    return int(np.sum(s > rtol * ref))


def qr_rank(M, rtol: float = 1e-9) -> int:
    """Rank via column-pivoted QR; suited to the larger audit matrices."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    if M.shape[0] < M.shape[1]:
        M = M.T
    R = scipy.linalg.qr(M, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0:
        return 0
    return int(np.sum(d > rtol * d[0]))


def nullspace(M, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Orthonormal rows spanning ker(M)."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:]


def rowspace(M, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Orthonormal rows spanning the row space of M."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.reshape(0, M.shape[-1])
    u, s, vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return M[:0]
    rank = int(np.sum(s > rtol * s[0]))
    return vt[:rank]


def rank_exact(rows) -> int:
    """Exact rank over Q by fraction-free Gaussian elimination.

    Entries must be Fractions or integers (floats are rejected: an inexact
    entry would defeat the point of this oracle).
    """
    mat = [[_as_fraction(x) for x in row] for row in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    rank = 0
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, nrows):
            if mat[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        pval = mat[row][col]
        for r in range(row + 1, nrows):
            if mat[r][col] != 0:
                factor = mat[r][col] / pval
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[row])]
        rank += 1
        row += 1
        if row == nrows:
            break
    return rank


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    raise TypeError(f"exact rank needs exact entries, got {type(x).__name__}")


def min_max_singular_ratio(M) -> float:
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0
