"""Quick invariant checks runnable from the command line without pytest."""

import itertools

import numpy as np

from .channel import PowerDelayProfile, draw_channel
from .constellation import qam
from .linalg import lskrf
from .receivers import (
    StopRule,
    count_symbol_errors,
    ilsp,
    kr_ls_receiver,
    kr_receiver,
    rc_kr_als_receiver,
    rc_kr_receiver,
    rlsp,
    zf_receiver,
)
from .tensor import contract2, generalized_unfold
from .transmit import PilotPattern, build_grid, kr_encode, rc_encode, transmit


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def check_contraction(rng, reps=20):
    worst = 0.0
    for _ in range(reps):
        i, j, k, m = rng.integers(1, 5, size=4)
        a = _crandn(rng, i, j, k)
        b = _crandn(rng, k, m, j)
        got = contract2(a, (2, 3), b, (3, 1))
        ref = np.zeros((i, m), complex)
        for p, q, r, s in itertools.product(range(i), range(m), range(j), range(k)):
            ref[p, q] += a[p, r, s] * b[s, q, r]
        worst = max(worst, np.abs(got - ref).max() / max(np.abs(ref).max(), 1e-300))
    return worst < 1e-12, f"max relative error {worst:.1e}"


def check_lskrf(rng, reps=20):
    worst = 0.0
    for _ in range(reps):
        q, k, r = rng.integers(1, 8, size=3)
        c = _crandn(rng, q, r)
        s = _crandn(rng, k, r)
        y = (c[:, None, :] * s[None, :, :]).reshape(q * k, r)
        worst = max(worst, np.abs(lskrf(y, q, k).reconstruct() - y).max())
    return worst < 1e-12, f"max reconstruction error {worst:.1e}"


def check_model_identity(rng, reps=10):
    worst = 0.0
    for _ in range(reps):
        n, m_r, m_t, k = int(rng.integers(4, 17)), *rng.integers(1, 4, size=2), int(rng.integers(1, 4))
        n_taps = int(rng.integers(1, 5))
        ch = draw_channel(rng, PowerDelayProfile.from_taps(np.ones(n_taps)), m_r, m_t, n)
        x = _crandn(rng, n, m_t, k)
        y = transmit(x, ch, n_taps - 1)
        ref = np.einsum("nrt,ntk->nrk", ch.freq_vectors, x)
        worst = max(worst, np.linalg.norm(y - ref) / np.linalg.norm(ref))
    return worst < 1e-10, f"max relative error {worst:.1e}"


def check_noiseless(rng):
    c = qam(4)
    failures = []
    for m_t, m_r, n, k, q in [(2, 2, 8, 4, 2), (2, 3, 8, 4, 2), (4, 4, 8, 4, 4)]:
        ch = draw_channel(rng, PowerDelayProfile.from_taps([0.6, 0.3, 0.1]), m_r, m_t, n)
        h_p = ch.views()
        grid = build_grid(rng, n, m_t, k, PilotPattern(m_t, k), c)
        known = (grid.known_mask, grid.s_pilot)
        y = transmit(grid.symbols, ch, 2)
        kr = kr_encode(grid, m_t)
        y_kr = transmit(kr.x, ch, 2)
        y_rc = transmit(rc_encode(rng, grid, q).x, ch, 2)
        outs = {
            "zf": zf_receiver(y, h_p, c, known),
            "ilsp": ilsp(y, h_p, StopRule(), c, known),
            "rlsp": rlsp(y, h_p, c, known=known),
            "kr": kr_receiver(y_kr, h_p, kr.c_bar, c, known),
            "kr_ls": kr_ls_receiver(y_kr, h_p, kr.c_bar, c, known),
            "rc_kr": rc_kr_receiver(y_rc, h_p, c, known),
            "rc_kr_als": rc_kr_als_receiver(y_rc, h_p, StopRule(5), c, known),
        }
        for name, out in outs.items():
            errs = count_symbol_errors(out.s_hat[grid.data_mask], grid.truth, c)
            if errs:
                failures.append(f"{name}@{(m_t, m_r, n, k, q)}: {errs} errors")
    return not failures, "; ".join(failures) or "all receivers exact"


CHECKS = {
    "double contraction matches loop oracle": check_contraction,
    "Khatri-Rao factorization reconstructs": check_lskrf,
    "time-domain chain equals frequency model": check_model_identity,
    "noiseless receivers recover data": check_noiseless,
}


def run(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS.items():
        ok, detail = fn(rng)
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name} ({detail})")
    return ok_all
