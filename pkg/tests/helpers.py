"""Independent reference implementations used as test oracles."""

import itertools

import numpy as np


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def loop_unfold(t, rows, cols):
    """Generalized unfolding by explicit index arithmetic (first listed mode fastest)."""
    shape = t.shape
    nrows = int(np.prod([shape[m - 1] for m in rows]))
    ncols = int(np.prod([shape[m - 1] for m in cols]))
    out = np.zeros((nrows, ncols), dtype=t.dtype)
    for idx in itertools.product(*[range(d) for d in shape]):
        r = c = 0
        stride = 1
        for m in rows:
            r += idx[m - 1] * stride
            stride *= shape[m - 1]
        stride = 1
        for m in cols:
            c += idx[m - 1] * stride
            stride *= shape[m - 1]
        out[r, c] = t[idx]
    return out


def loop_contract(a, a_modes, b, b_modes):
    """Contraction by summing over every index combination."""
    a_free = [m for m in range(1, a.ndim + 1) if m not in a_modes]
    b_free = [m for m in range(1, b.ndim + 1) if m not in b_modes]
    out_shape = [a.shape[m - 1] for m in a_free] + [b.shape[m - 1] for m in b_free]
    out = np.zeros(out_shape, dtype=np.result_type(a, b))
    summed = [a.shape[m - 1] for m in a_modes]
    for out_idx in itertools.product(*[range(d) for d in out_shape]):
        acc = 0
        for s in itertools.product(*[range(d) for d in summed]):
            ia = [0] * a.ndim
            ib = [0] * b.ndim
            for m, v in zip(a_free, out_idx[: len(a_free)]):
                ia[m - 1] = v
            for m, v in zip(b_free, out_idx[len(a_free) :]):
                ib[m - 1] = v
            for ma, mb, v in zip(a_modes, b_modes, s):
                ia[ma - 1] = v
                ib[mb - 1] = v
            acc += a[tuple(ia)] * b[tuple(ib)]
        out[out_idx] = acc
    return out


def loop_khatri_rao(a, b):
    return np.column_stack([np.kron(a[:, j], b[:, j]) for j in range(a.shape[1])])
