"""Frame grids, Khatri-Rao and random coding, and the OFDM time-domain chain."""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, antenna_permutation
from .constellation import Constellation

__all__ = [
    "PilotPattern",
    "FrameGrid",
    "build_grid",
    "CodedSignal",
    "vandermonde_code",
    "kr_encode",
    "rc_encode",
    "uncoded_signal",
    "ofdm_transmit",
    "apply_channel",
    "add_awgn",
    "ofdm_receive",
    "noise_variance",
    "check_cyclic_prefix",
    "transmit",
]


@dataclass(frozen=True)
class PilotPattern:
    """Comb pilots every ``delta_f`` subcarriers in every ``delta_k``-th frame.

    Antenna ``t`` (0-based) uses subcarriers ``t + i*delta_f`` for
    ``i < N // delta_f``; the other antennas stay silent there.
    """

    delta_f: int
    delta_k: int

    def masks(self, n: int, m_t: int, k: int):
        if self.delta_f < m_t:
            raise ValueError(f"pilot spacing delta_f={self.delta_f} cannot fit {m_t} antenna offsets")
        if self.delta_k < 1:
            raise ValueError("delta_k must be positive")
        pilot = np.zeros((n, m_t, k), bool)
        null = np.zeros((n, m_t, k), bool)
        frames = np.arange(0, k, self.delta_k)
        base = np.arange(n // self.delta_f) * self.delta_f
        for t in range(m_t):
            sc = base + t
            pilot[np.ix_(sc, [t], frames)] = True
            others = [u for u in range(m_t) if u != t]
            if others:
                null[np.ix_(sc, others, frames)] = True
        return pilot, null


@dataclass(frozen=True, eq=False)
class FrameGrid:
    """Transmit symbols ``symbols[n, t, k]`` with pilot/data/null masks of the same shape."""

    symbols: np.ndarray
    pilot_mask: np.ndarray
    data_mask: np.ndarray
    null_mask: np.ndarray
    constellation: Constellation

    @property
    def n(self) -> int:
        return self.symbols.shape[0]

    @property
    def m_t(self) -> int:
        return self.symbols.shape[1]

    @property
    def k(self) -> int:
        return self.symbols.shape[2]

    @property
    def known_mask(self) -> np.ndarray:
        return self.pilot_mask | self.null_mask

    @property
    def s_data(self) -> np.ndarray:
        return np.where(self.data_mask, self.symbols, 0)

    @property
    def s_pilot(self) -> np.ndarray:
        return np.where(self.pilot_mask, self.symbols, 0)

    @property
    def s_tilde(self) -> np.ndarray:
        """K x N*M_T symbol matrix, column ``n + N*t``."""
        return self.symbols.transpose(2, 1, 0).reshape(self.k, -1)

    @property
    def s_bar(self) -> np.ndarray:
        """K x M_T*N symbol matrix, column ``t + M_T*n``."""
        return self.symbols.transpose(2, 0, 1).reshape(self.k, -1)

    @property
    def truth(self) -> np.ndarray:
        return self.symbols[self.data_mask]

    @property
    def n_data(self) -> int:
        return int(self.data_mask.sum())


def build_grid(rng, n: int, m_t: int, k: int, pilots: PilotPattern, constellation: Constellation) -> FrameGrid:
    if min(n, m_t, k) < 1:
        raise ValueError("N, M_T and K must be positive")
    pilot, null = pilots.masks(n, m_t, k)
    data = ~(pilot | null)
    pilot_syms = constellation.random_symbols(rng, (n, m_t, k))
    data_syms = constellation.random_symbols(rng, (n, m_t, k))
    symbols = np.where(pilot, pilot_syms, np.where(data, data_syms, 0)).astype(np.complex128)
    return FrameGrid(symbols, pilot, data, null, constellation)


@dataclass(frozen=True, eq=False)
class CodedSignal:
    """Signal tensor ``x[n, t, k, q]`` with ``[x]_([2,1],[4,3]) = (s_bar ⋄ c_bar)^T``."""

    x: np.ndarray
    s_bar: np.ndarray
    c_bar: np.ndarray
    code_data_mask: np.ndarray

    @property
    def q(self) -> int:
        return self.c_bar.shape[0]

    @property
    def code_truth(self) -> np.ndarray:
        return self.c_bar[self.code_data_mask]


def _signal_tensor(s_bar, c_bar, n, m_t):
    k, q = s_bar.shape[0], c_bar.shape[0]
    x = s_bar[:, None, :] * c_bar[None, :, :]  # (K, Q, M_T*N)
    return x.reshape(k, q, n, m_t).transpose(2, 3, 0, 1)


def vandermonde_code(q: int, m_t: int) -> np.ndarray:
    """Unit-modulus Vandermonde (DFT) code with ``C^H C = Q I``."""
    if q != m_t:
        raise ValueError(f"Khatri-Rao coding needs spreading factor Q == M_T, got Q={q}, M_T={m_t}")
    idx = np.arange(q)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / q)


def kr_encode(grid: FrameGrid, q: int, code=None) -> CodedSignal:
    """Khatri-Rao coding with one code matrix shared by every subcarrier."""
    c = vandermonde_code(q, grid.m_t) if code is None else np.asarray(code)
    if c.shape != (q, grid.m_t):
        raise ValueError(f"code matrix must be {q} x {grid.m_t}")
    c_bar = np.tile(c, (1, grid.n))
    s_bar = grid.s_tilde @ antenna_permutation(grid.n, grid.m_t)
    x = _signal_tensor(s_bar, c_bar, grid.n, grid.m_t)
    return CodedSignal(x, s_bar, c_bar, np.zeros(c_bar.shape, bool))


def uncoded_signal(grid: FrameGrid) -> CodedSignal:
    """Q = 1 degenerate case with an all-ones code row."""
    return kr_encode(grid, 1, code=np.ones((1, grid.m_t)))


def rc_encode(rng, grid: FrameGrid, q: int, constellation: Constellation | None = None) -> CodedSignal:
    """Random coding: first code row all ones, rows 2..Q carry data symbols."""
    if q < 2:
        raise ValueError("random coding needs Q >= 2 so that the code carries data")
    constellation = constellation or grid.constellation
    c_bar = np.ones((q, grid.m_t * grid.n), dtype=np.complex128)
    c_bar[1:] = constellation.random_symbols(rng, (q - 1, grid.m_t * grid.n))
    mask = np.zeros(c_bar.shape, bool)
    mask[1:] = True
    s_bar = grid.s_tilde @ antenna_permutation(grid.n, grid.m_t)
    x = _signal_tensor(s_bar, c_bar, grid.n, grid.m_t)
    return CodedSignal(x, s_bar, c_bar, mask)


def ofdm_transmit(x_freq, cp_len: int) -> np.ndarray:
    """Unitary IFFT along subcarriers, then prepend the last ``cp_len`` samples."""
    x_time = np.fft.ifft(np.asarray(x_freq), axis=0, norm="ortho")
    n = x_time.shape[0]
    # wraps around more than once if the prefix is longer than the block
    return np.take(x_time, np.arange(-cp_len, n) % n, axis=0)


def apply_channel(time_blocks, ch: ChannelRealization) -> np.ndarray:
    """Serially transmit the blocks (frame order = C order of trailing axes) through the channel."""
    time_blocks = np.asarray(time_blocks)
    s, m_t = time_blocks.shape[:2]
    frames = time_blocks.shape[2:]
    if ch.taps.shape[2] != m_t:
        raise ValueError(f"channel has {ch.taps.shape[2]} transmit antennas, signal has {m_t}")
    stream = time_blocks.reshape(s, m_t, -1).transpose(2, 0, 1).reshape(-1, m_t)
    out = np.zeros((stream.shape[0], ch.taps.shape[1]), dtype=np.complex128)
    for l in range(ch.n_taps):
        if np.any(ch.taps[l]):
            out[l:] += stream[: stream.shape[0] - l] @ ch.taps[l].T
    m_r = out.shape[1]
    return out.reshape(-1, s, m_r).transpose(1, 2, 0).reshape((s, m_r) + frames)


def add_awgn(rng, signal, sigma2: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian noise of variance ``sigma2`` per entry."""
    signal = np.asarray(signal)
    if sigma2 == 0:
        return signal.copy()
    g = rng.standard_normal((2,) + signal.shape)
    return signal + np.sqrt(sigma2 / 2.0) * (g[0] + 1j * g[1])


def ofdm_receive(rx_time, cp_len: int, n: int) -> np.ndarray:
    rx_time = np.asarray(rx_time)
    if rx_time.shape[0] != n + cp_len:
        raise ValueError(f"expected blocks of {n + cp_len} samples, got {rx_time.shape[0]}")
    return np.fft.fft(rx_time[cp_len:], axis=0, norm="ortho")


def check_cyclic_prefix(cp_len: int, ch: ChannelRealization):
    if cp_len < ch.n_taps - 1:
        raise ValueError(f"cyclic prefix of {cp_len} samples is shorter than the delay spread {ch.n_taps - 1}")


def transmit(x_freq, ch: ChannelRealization, cp_len: int) -> np.ndarray:
    """Noiseless end-to-end chain returning the frequency-domain receive tensor."""
    check_cyclic_prefix(cp_len, ch)
    rx = apply_channel(ofdm_transmit(x_freq, cp_len), ch)
    return ofdm_receive(rx, cp_len, np.asarray(x_freq).shape[0])


def noise_variance(ebn0_db: float, m_t: int, bits_per_symbol: int) -> float:
    """Per receive antenna noise variance for unit-energy symbols on M_T superposed streams."""
    if np.isposinf(ebn0_db):
        return 0.0
    return m_t / (bits_per_symbol * 10.0 ** (ebn0_db / 10.0))
