"""Estimation primitives shared by the receivers."""

from dataclasses import dataclass

import numpy as np

__all__ = ["pinv", "KrfResult", "lskrf", "project_alphabet", "numerical_rank", "safe_ratio_mean"]


def pinv(m, rel_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse; works on stacks of matrices along leading axes.

    Singular values below ``rel_tol * sigma_max`` are treated as zero. The
    default tolerance is ``1e-12 * max(rows, cols)``.
    """
    m = np.asarray(m)
    if m.ndim < 2:
        raise ValueError("pinv needs at least a 2-D array")
    rows, cols = m.shape[-2:]
    if rel_tol is None:
        rel_tol = 1e-12 * max(rows, cols)
    if m.size == 0:
        return np.zeros(m.shape[:-2] + (cols, rows), dtype=np.result_type(m.dtype, np.float64))
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    cutoff = rel_tol * s.max(axis=-1, keepdims=True)
    keep = s > cutoff
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return np.einsum("...ji,...j,...kj->...ik", vh.conj(), s_inv, u.conj())


def numerical_rank(m, rel_tol: float = 1e-8) -> np.ndarray:
    """Rank of each matrix in a stack, singular values below ``rel_tol * sigma_max`` dropped."""
    s = np.linalg.svd(np.asarray(m), compute_uv=False)
    smax = s.max(axis=-1, keepdims=True)
    return np.sum(s > rel_tol * smax, axis=-1) * (smax[..., 0] > 0)


@dataclass(frozen=True)
class KrfResult:
    """Factors of ``y ≈ right ⋄ left``; ``left`` is k x R, ``right`` is q x R."""

    left: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q, r = self.right.shape
        k = self.left.shape[0]
        return (self.right[:, None, :] * self.left[None, :, :]).reshape(q * k, r)


def lskrf(y, q: int, k: int) -> KrfResult:
    """Least-squares Khatri-Rao factorization of a (q*k) x R matrix.

    Column ``r`` is reshaped into a k x q matrix (the ``left`` index varies
    fastest, matching :func:`~tensorofdm.tensor.khatri_rao`) and replaced by its
    best rank-one approximation, split as ``sqrt(sigma) u`` / ``sqrt(sigma) conj(v)``.
    A zero column yields zero factors.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2 or y.shape[0] != q * k:
        raise ValueError(f"expected {q * k} rows for q={q}, k={k}, got shape {y.shape}")
    # blocks[r] = column r as a k x q matrix with block[i, j] = y[j*k + i, r]
    blocks = y.T.reshape(y.shape[1], q, k).transpose(0, 2, 1)
    u, s, vh = np.linalg.svd(blocks, full_matrices=False)
    root = np.sqrt(s[:, 0])
    left = (u[:, :, 0] * root[:, None]).T
    right = (vh[:, 0, :] * root[:, None]).T
    return KrfResult(left=left, right=right)


def project_alphabet(m, constellation) -> np.ndarray:
    """Replace every entry by the nearest constellation point (ties -> lowest index)."""
    return constellation.points[nearest_index(m, constellation)]


def nearest_index(m, constellation) -> np.ndarray:
    m = np.asarray(m)
    dist = np.abs(m[..., None] - constellation.points)
    return np.argmin(dist, axis=-1)


def safe_ratio_mean(num, den, axis=0, floor: float = 1e-12) -> np.ndarray:
    """Average of ``num / den`` along ``axis`` skipping near-zero divisors.

    Entries with ``|den| < floor * max|den|`` are left out and the average is
    renormalized over the remaining ones; a slice with no usable entry gives 1.
    """
    num = np.asarray(num)
    den = np.asarray(den)
    scale = np.abs(den).max() if den.size else 0.0
    ok = np.abs(den) >= floor * scale if scale > 0 else np.zeros(den.shape, bool)
    ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    count = ok.sum(axis=axis)
    total = ratio.sum(axis=axis)
    return np.where(count > 0, total / np.maximum(count, 1), 1.0)
