"""Frequency-selective MIMO channels and their frequency-domain tensor views."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tensor import khatri_rao, kronecker_mat

__all__ = [
    "PowerDelayProfile",
    "PED_A_DELAYS_NS",
    "PED_A_POWERS_DB",
    "PED_A_SAMPLE_RATE_HZ",
    "ped_a",
    "ChannelRealization",
    "FreqChannelViews",
    "dft_columns",
    "draw_channel",
    "freq_channel_views",
    "antenna_permutation",
    "pilot_channel_estimate",
]

# ITU-R M.1225 pedestrian A tapped delay line
PED_A_DELAYS_NS = (0.0, 110.0, 190.0, 410.0)
PED_A_POWERS_DB = (0.0, -9.7, -19.2, -22.8)
PED_A_SAMPLE_RATE_HZ = 10e6


@dataclass(frozen=True)
class PowerDelayProfile:
    tap_delays_samples: tuple
    tap_powers_linear: tuple

    def __post_init__(self):
        d = np.asarray(self.tap_delays_samples)
        p = np.asarray(self.tap_powers_linear, dtype=float)
        if d.size == 0 or d.size != p.size:
            raise ValueError("delays and powers must be non-empty and of equal length")
        if np.any(d < 0) or np.any(np.diff(d) <= 0):
            raise ValueError("tap delays must be non-negative and strictly increasing")
        if np.any(p <= 0):
            raise ValueError("tap powers must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"tap powers must sum to one, got {p.sum()!r}")

    @property
    def n_taps(self) -> int:
        """Length L of the sample-spaced impulse response."""
        return int(self.tap_delays_samples[-1]) + 1

    @property
    def max_delay(self) -> int:
        return int(self.tap_delays_samples[-1])

    @classmethod
    def from_ns(cls, delays_ns, powers_db, sample_rate_hz):
        """Round each delay to the nearest sample; taps landing on one sample are merged."""
        delays = np.rint(np.asarray(delays_ns, float) * 1e-9 * sample_rate_hz).astype(int)
        powers = 10.0 ** (np.asarray(powers_db, float) / 10.0)
        merged: dict[int, float] = {}
        for d, p in zip(delays, powers):
            merged[int(d)] = merged.get(int(d), 0.0) + p
        keys = sorted(merged)
        total = sum(merged.values())
        return cls(tuple(keys), tuple(merged[k] / total for k in keys))

    @classmethod
    def from_taps(cls, powers_linear):
        """Sample-spaced profile from per-sample powers; zero entries are skipped."""
        p = np.asarray(powers_linear, float)
        idx = np.flatnonzero(p > 0)
        return cls(tuple(int(i) for i in idx), tuple(p[idx] / p[idx].sum()))


def ped_a() -> PowerDelayProfile:
    return PowerDelayProfile.from_ns(PED_A_DELAYS_NS, PED_A_POWERS_DB, PED_A_SAMPLE_RATE_HZ)


def dft_columns(n: int, l: int, rows=None) -> np.ndarray:
    """First ``l`` columns of the (non-normalized) N-point DFT matrix, optionally a row subset."""
    rows = np.arange(n) if rows is None else np.asarray(rows)
    return np.exp(-2j * np.pi * np.outer(rows, np.arange(l)) / n)


@dataclass(frozen=True, eq=False)
class FreqChannelViews:
    """Per-subcarrier channel matrices ``h_freq[n]`` (M_R x M_T) and the derived views."""

    h_freq: np.ndarray

    @property
    def n(self) -> int:
        return self.h_freq.shape[0]

    @property
    def m_r(self) -> int:
        return self.h_freq.shape[1]

    @property
    def m_t(self) -> int:
        return self.h_freq.shape[2]

    @cached_property
    def tensor_view(self) -> np.ndarray:
        """N x N x M_R x M_T tensor with diagonal frontal slices."""
        n = np.arange(self.n)
        t = np.zeros((self.n, self.n, self.m_r, self.m_t), dtype=self.h_freq.dtype)
        t[n, n] = self.h_freq
        return t

    @cached_property
    def h_tilde_mat(self) -> np.ndarray:
        """M_R x N*M_T, column ``n + N*t`` (subcarrier fastest)."""
        return self.h_freq.transpose(1, 2, 0).reshape(self.m_r, -1)

    @cached_property
    def h_bar_mat(self) -> np.ndarray:
        """M_R x M_T*N, column ``t + M_T*n`` (antenna fastest)."""
        return self.h_freq.transpose(1, 0, 2).reshape(self.m_r, -1)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Sample-spaced impulse responses ``taps[l, m_r, m_t]`` for an N-subcarrier system."""

    taps: np.ndarray
    n: int

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]

    @cached_property
    def freq_vectors(self) -> np.ndarray:
        """N x M_R x M_T frequency responses, ``F_{N x L} @ h_L`` per link."""
        return np.einsum("nl,lrt->nrt", dft_columns(self.n, self.n_taps), self.taps)

    def views(self) -> FreqChannelViews:
        return FreqChannelViews(self.freq_vectors)


def draw_channel(rng, pdp: PowerDelayProfile, m_r: int, m_t: int, n: int) -> ChannelRealization:
    """Rayleigh-faded taps, i.i.d. across links, variance per tap equal to its power."""
    taps = np.zeros((pdp.n_taps, m_r, m_t), dtype=np.complex128)
    d = np.asarray(pdp.tap_delays_samples)
    std = np.sqrt(np.asarray(pdp.tap_powers_linear) / 2.0)[:, None, None]
    g = rng.standard_normal((2, d.size, m_r, m_t))
    taps[d] = std * (g[0] + 1j * g[1])
    return ChannelRealization(taps, n)


def freq_channel_views(ch: ChannelRealization) -> FreqChannelViews:
    return ch.views()


def antenna_permutation(n: int, m_t: int) -> np.ndarray:
    """Permutation ``P`` with ``X @ P`` reordering columns from ``n + N*t`` to ``t + M_T*n``."""
    p = np.zeros((n * m_t, m_t * n))
    t, k = np.meshgrid(np.arange(m_t), np.arange(n), indexing="ij")
    p[(k + n * t).ravel(), (t + m_t * k).ravel()] = 1.0
    return p


def selection_ones(n: int, m_t: int) -> np.ndarray:
    """``I_N ⊗ 1^T_{M_T}``: maps antenna-fastest columns onto their subcarrier."""
    return kronecker_mat(np.eye(n), np.ones((1, m_t)))


def pilot_channel_estimate(y, grid, n_taps: int, code=None) -> FreqChannelViews:
    """Least-squares time-domain channel fit from the comb pilots, interpolated to all subcarriers.

    ``y`` is the N x M_R x K receive tensor, or N x M_R x K x Q for coded
    transmission, in which case ``code`` (Q x M_T) holds the known weights the
    pilot symbol of antenna ``t`` is multiplied by in block ``q``.
    """
    y = np.asarray(y)
    if y.ndim == 3:
        y = y[..., None]
        code = np.ones((1, grid.m_t))
    elif code is None:
        raise ValueError("coded receive tensor needs the per-block pilot weights")
    code = np.asarray(code)
    n, m_r = y.shape[:2]
    est = np.zeros((n, m_r, grid.m_t), dtype=np.complex128)
    for t in range(grid.m_t):
        sc, fr = np.nonzero(grid.pilot_mask[:, t, :])
        if np.unique(sc).size < n_taps:
            raise ValueError(
                f"antenna {t + 1} has {np.unique(sc).size} pilot subcarriers, fewer than {n_taps} channel taps"
            )
        s_p = grid.symbols[sc, t, fr]
        f = dft_columns(n, n_taps, sc)
        # rows: (pilot position, block)
        w = s_p[:, None] * code[None, :, t]
        a = (w[:, :, None] * f[:, None, :]).reshape(-1, n_taps)
        obs = y[sc, :, fr, :].transpose(0, 2, 1).reshape(-1, m_r)
        h, *_ = np.linalg.lstsq(a, obs, rcond=None)
        est[:, :, t] = dft_columns(n, n_taps) @ h
    return FreqChannelViews(est)
