"""Dense multilinear algebra on complex numpy arrays.

Tensors are plain ``numpy.ndarray`` objects. Wherever a tensor is flattened
(generalized unfoldings, :func:`tensor_data`) the *first* index varies the
fastest, i.e. Fortran order. Mode indices are 1-based at this API boundary.
"""

from math import prod
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "ModeSpec",
    "as_tensor",
    "tensor_data",
    "from_data",
    "identity_tensor",
    "generalized_unfold",
    "generalized_fold",
    "n_mode_product",
    "contract",
    "contract2",
    "kronecker_mat",
    "khatri_rao",
    "tensor_kron",
    "DIAG_PATTERNS",
    "build_diag_tensor",
    "diag_unfolding_spec",
    "slicewise_multiply",
]


class ModeSpec(NamedTuple):
    """Row and column mode lists of a generalized unfolding (1-based)."""

    rows: tuple
    cols: tuple


def as_tensor(x) -> np.ndarray:
    t = np.asarray(x, dtype=np.complex128)
    if t.ndim == 0 or 0 in t.shape:
        raise ValueError(f"tensor needs at least one mode and non-empty extents, got shape {t.shape}")
    return t


def tensor_data(t) -> np.ndarray:
    """Linear data vector of ``t`` with the first index varying fastest."""
    return np.asarray(t).ravel(order="F")


def from_data(data, dims: Sequence[int]) -> np.ndarray:
    data = np.asarray(data)
    if data.ndim != 1 or data.size != prod(dims):
        raise ValueError(f"{data.size} values cannot fill dims {tuple(dims)}")
    return data.reshape(tuple(dims), order="F")


def identity_tensor(order: int, size: int) -> np.ndarray:
    """Super-diagonal tensor with ``order`` modes of extent ``size``."""
    t = np.zeros((size,) * order)
    idx = np.arange(size)
    t[(idx,) * order] = 1.0
    return t


def _check_modes(ndim, rows, cols, allow_empty=False):
    rows = tuple(int(m) for m in rows)
    cols = tuple(int(m) for m in cols)
    if not allow_empty and (not rows or not cols):
        raise ValueError("row and column mode lists must both be non-empty")
    modes = rows + cols
    if sorted(modes) != list(range(1, ndim + 1)):
        raise ValueError(f"modes {rows}/{cols} do not partition 1..{ndim}")
    return rows, cols


def _matricize(t, rows, cols):
    perm = [m - 1 for m in rows + cols]
    nrows = prod(t.shape[m - 1] for m in rows)
    return np.transpose(t, perm).reshape((nrows, -1), order="F")


def generalized_unfold(t, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """Unfold ``t`` with modes ``rows`` along the rows and ``cols`` along the columns.

    Within each index set the first listed mode varies the fastest.
    """
    t = np.asarray(t)
    rows, cols = _check_modes(t.ndim, rows, cols)
    return _matricize(t, rows, cols)


def generalized_fold(m, rows: Sequence[int], cols: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`generalized_unfold`."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    rows, cols = _check_modes(len(dims), rows, cols)
    shape = (prod(dims[r - 1] for r in rows), prod(dims[c - 1] for c in cols))
    if m.shape != shape:
        raise ValueError(f"matrix of shape {m.shape} does not match unfolding shape {shape}")
    order = rows + cols
    t = m.reshape([dims[i - 1] for i in order], order="F")
    return np.transpose(t, np.argsort([i - 1 for i in order]))


def n_mode_product(t, m, n: int) -> np.ndarray:
    """``t ×_n m``: multiply every mode-``n`` fiber of ``t`` by ``m``."""
    t = np.asarray(t)
    m = np.asarray(m)
    if not 1 <= n <= t.ndim:
        raise ValueError(f"mode {n} out of range for a {t.ndim}-way tensor")
    if m.ndim != 2 or m.shape[1] != t.shape[n - 1]:
        raise ValueError(f"matrix {m.shape} incompatible with mode {n} of extent {t.shape[n - 1]}")
    out = np.tensordot(m, t, axes=([1], [n - 1]))
    return np.moveaxis(out, 0, n - 1)


def contract(a, a_modes: Sequence[int], b, b_modes: Sequence[int]) -> np.ndarray:
    """Contract modes ``a_modes`` of ``a`` with the paired ``b_modes`` of ``b``.

    The result carries the free modes of ``a`` (original order) followed by the
    free modes of ``b``. Computed as a product of generalized unfoldings.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    a_modes = tuple(int(m) for m in a_modes)
    b_modes = tuple(int(m) for m in b_modes)
    if len(a_modes) != len(b_modes) or not a_modes:
        raise ValueError("contracted mode lists must be non-empty and of equal length")
    for p, q in zip(a_modes, b_modes):
        if not (1 <= p <= a.ndim and 1 <= q <= b.ndim):
            raise ValueError(f"contracted mode pair ({p}, {q}) out of range")
        if a.shape[p - 1] != b.shape[q - 1]:
            raise ValueError(
                f"mode {p} of a (extent {a.shape[p - 1]}) does not match mode {q} of b (extent {b.shape[q - 1]})"
            )
    a_free = tuple(m for m in range(1, a.ndim + 1) if m not in a_modes)
    b_free = tuple(m for m in range(1, b.ndim + 1) if m not in b_modes)
    _check_modes(a.ndim, a_free, a_modes, allow_empty=True)
    _check_modes(b.ndim, b_modes, b_free, allow_empty=True)
    prod_ = _matricize(a, a_free, a_modes) @ _matricize(b, b_modes, b_free)
    dims = [a.shape[m - 1] for m in a_free] + [b.shape[m - 1] for m in b_free]
    return prod_.reshape(dims, order="F")


def contract2(a, a_modes: Sequence[int], b, b_modes: Sequence[int]) -> np.ndarray:
    """Double contraction ``a •_{n,k}^{m,l} b`` with ``a_modes=(n, k)`` and ``b_modes=(m, l)``."""
    if len(a_modes) != 2 or len(b_modes) != 2:
        raise ValueError("double contraction needs exactly two mode pairs")
    return contract(a, a_modes, b, b_modes)


def kronecker_mat(a, b) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def khatri_rao(a, b) -> np.ndarray:
    """Column-wise Kronecker product; column ``j`` is ``kron(a[:, j], b[:, j])``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"Khatri-Rao product needs equal column counts, got {a.shape[1]} and {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def tensor_kron(a, b) -> np.ndarray:
    """Kronecker product of two tensors, padding the lower-order one with trailing singleton modes.

    Only used to build structured identity cores; the general case follows the
    matrix convention (entries of ``b`` vary fastest inside each block).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    order = max(a.ndim, b.ndim)
    a = a.reshape(a.shape + (1,) * (order - a.ndim))
    b = b.reshape(b.shape + (1,) * (order - b.ndim))
    return np.kron(a, b)


# Diagonalization patterns. Each entry maps a pattern name to the source order
# and the generalized unfolding that turns the diagonal tensor into a
# Khatri-Rao product with an identity matrix.
DIAG_PATTERNS = {
    # vector a (M) -> D (M x M), D[m, m] = a[m];  D = I_M ⋄ a^T
    "vector": (1, None),
    # matrix A (M x N) -> D (M x N x N), D[m, n, n] = A[m, n];  [D]_([1,3],[2]) = I_N ⋄ A
    "mnn": (2, ((1, 3), (2,))),
    # matrix A (M x N) -> D (M x M x N), D[m, m, n] = A[m, n];  [D]_([3,2],[1]) = I_M ⋄ A^T
    "mmn": (2, ((3, 2), (1,))),
    # matrix A (M x N) -> D (M x M x N x N), D[m, m, n, n] = A[m, n];  [D]_([1,3],[2,4]) = I_MN ⋄ vec(A)^T
    "mmnn": (2, ((1, 3), (2, 4))),
    # tensor A (M x N x K) -> D (M x N x K x K), D[m, n, k, k] = A[m, n, k];  [D]_([1,2,4],[3]) = I_K ⋄ [A]_([1,2],[3])
    "mnkk": (3, ((1, 2, 4), (3,))),
    # tensor A (M x N x K) -> D (M x M x N x K), D[m, m, n, k] = A[m, n, k];  [D]_([3,4,2],[1]) = I_M ⋄ [A]_([2,3],[1])
    "mmnk": (3, ((3, 4, 2), (1,))),
}


def diag_unfolding_spec(pattern: str):
    """The (rows, cols) unfolding under which ``pattern`` becomes ``I ⋄ src``."""
    try:
        return DIAG_PATTERNS[pattern][1]
    except KeyError:
        raise ValueError(f"unknown diagonal pattern {pattern!r}") from None


def build_diag_tensor(src, pattern: str) -> np.ndarray:
    if pattern not in DIAG_PATTERNS:
        raise ValueError(f"unknown diagonal pattern {pattern!r}; choose from {sorted(DIAG_PATTERNS)}")
    src = np.asarray(src)
    order = DIAG_PATTERNS[pattern][0]
    if src.ndim != order:
        raise ValueError(f"pattern {pattern!r} expects a {order}-way source, got shape {src.shape}")
    dtype = np.result_type(src.dtype, np.float64)
    if pattern == "vector":
        return np.diag(src).astype(dtype)
    if pattern == "mnn":
        M, N = src.shape
        d = np.zeros((M, N, N), dtype)
        n = np.arange(N)
        d[:, n, n] = src
        return d
    if pattern == "mmn":
        M, N = src.shape
        d = np.zeros((M, M, N), dtype)
        m = np.arange(M)
        d[m, m, :] = src
        return d
    if pattern == "mmnn":
        M, N = src.shape
        d = np.zeros((M, M, N, N), dtype)
        m = np.arange(M)[:, None]
        n = np.arange(N)[None, :]
        d[m, m, n, n] = src
        return d
    if pattern == "mnkk":
        M, N, K = src.shape
        d = np.zeros((M, N, K, K), dtype)
        k = np.arange(K)
        d[:, :, k, k] = src
        return d
    M, N, K = src.shape
    d = np.zeros((M, M, N, K), dtype)
    m = np.arange(M)
    d[m, m, :, :] = src
    return d


def slicewise_multiply(a, b) -> np.ndarray:
    """Multiply frontal slices: ``out[:, :, k] = a[:, :, k] @ b[:, :, k]``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 3 or b.ndim != 3:
        raise ValueError("slice-wise multiplication needs two 3-way tensors")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"incompatible slice shapes {a.shape} and {b.shape}")
    return np.einsum("mnk,njk->mjk", a, b)
