"""Channel and symbol estimators operating on the frequency-domain receive tensor.

All receivers work subcarrier by subcarrier, batched over the subcarrier
axis. For the coded systems the matrices of the global model (for example
``C̄ ⋄ (I_N ⊗ 1^T)``) are block diagonal over subcarriers, so their
pseudo-inverses and Khatri-Rao factorizations decouple into N small problems.

Layouts
-------
* uncoded receive tensor ``y``: N x M_R x K
* coded receive tensor ``y``: N x M_R x K x Q
* symbol estimates ``s_hat``: N x M_T x K (the :class:`FrameGrid` layout)
* ``c_bar`` / ``c_hat``: Q x M_T*N, column ``t + M_T*n``
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import FreqChannelViews
from .linalg import lskrf, nearest_index, numerical_rank, pinv, safe_ratio_mean

__all__ = [
    "StopRule",
    "ReceiverOutput",
    "zf_receiver",
    "ilsp",
    "rlsp",
    "kr_receiver",
    "kr_ls_receiver",
    "rc_kr_receiver",
    "rc_kr_als_receiver",
    "flop_estimate",
    "count_symbol_errors",
    "bar_to_blocks",
    "blocks_to_bar",
    "RANK_TOL",
]

RANK_TOL = 1e-8
DIV_FLOOR = 1e-12


@dataclass(frozen=True)
class StopRule:
    max_iterations: int = 7
    min_err: float = 1e-6
    min_cost: float = 1e-12

    def __post_init__(self):
        if self.max_iterations < 1 or self.min_err <= 0 or self.min_cost <= 0:
            raise ValueError("stop rule parameters must be positive")


ALS_STOP = StopRule(max_iterations=5)


@dataclass
class ReceiverOutput:
    s_hat: np.ndarray
    s_soft: np.ndarray
    h_hat: FreqChannelViews | None = None
    c_hat: np.ndarray | None = None
    iterations_used: int = 1
    converged: bool = True
    cost_history: list = field(default_factory=list)
    cost_trace: list = field(default_factory=list)


def bar_to_blocks(mat, n: int, m_t: int) -> np.ndarray:
    """rows x M_T*N matrix (antenna fastest) -> N x rows x M_T stack."""
    mat = np.asarray(mat)
    return mat.reshape(mat.shape[0], n, m_t).transpose(1, 0, 2)


def blocks_to_bar(blocks) -> np.ndarray:
    blocks = np.asarray(blocks)
    return blocks.transpose(1, 0, 2).reshape(blocks.shape[1], -1)


def _kr(a, b):
    """Batched Khatri-Rao over the leading axis; rows of ``b`` vary fastest."""
    n, ra, t = a.shape
    return (a[:, :, None, :] * b[:, None, :, :]).reshape(n, ra * b.shape[1], t)


def _project(s, constellation, known):
    if constellation is None:
        return s
    out = constellation.points[nearest_index(s, constellation)]
    if known is not None:
        mask, values = known
        out = np.where(mask, values, out)
    return out


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


# -- uncoded MIMO-OFDM ------------------------------------------------------


def zf_receiver(y, h_p: FreqChannelViews, constellation=None, known=None) -> ReceiverOutput:
    """Per-subcarrier zero forcing; projection to the alphabet is for scoring only."""
    y = np.asarray(y)
    h = h_p.h_freq
    _require(h_p.m_r >= h_p.m_t, "zero forcing needs M_R >= M_T")
    s_soft = pinv(h) @ y
    return ReceiverOutput(_project(s_soft, constellation, known), s_soft, h_p)


def ilsp(y, h_p: FreqChannelViews, stop: StopRule, constellation, known=None) -> ReceiverOutput:
    """Iterative least squares with projection, one independent run per subcarrier.

    The channel of a subcarrier is re-estimated only when its projected symbol
    matrix has full row rank; iterations end after ``stop.max_iterations``
    passes or once the channel update is smaller than ``stop.min_err``.
    """
    y = np.asarray(y)
    h = h_p.h_freq.copy()
    n, m_r, m_t = h.shape
    _require(m_r >= m_t, "ILSP needs M_R >= M_T")
    s_soft = np.zeros((n, m_t, y.shape[2]), dtype=np.complex128)
    s_hat = np.zeros_like(s_soft)
    active = np.ones(n, bool)
    iterations = np.zeros(n, int)
    for _ in range(stop.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        h_prev = h[idx]
        soft = pinv(h_prev) @ y[idx]
        sub_known = None if known is None else (known[0][idx], known[1][idx])
        proj = _project(soft, constellation, sub_known)
        full = numerical_rank(proj, RANK_TOL) == m_t
        h_new = h_prev.copy()
        if full.any():
            h_new[full] = y[idx[full]] @ pinv(proj[full])
        err = np.sum(np.abs(h_prev - h_new) ** 2, axis=(1, 2))
        h[idx] = h_new
        s_soft[idx] = soft
        s_hat[idx] = proj
        iterations[idx] += 1
        active[idx[err < stop.min_err]] = False
    return ReceiverOutput(
        s_hat,
        s_soft,
        FreqChannelViews(h),
        iterations_used=int(iterations.max()),
        converged=not active.any(),
    )


def rlsp(y, h_p: FreqChannelViews, constellation, alpha: float = 1.0, known=None) -> ReceiverOutput:
    """Recursive least squares with projection.

    One ZF + projection pass gives the symbol decisions, the channel is then
    refined by an exponentially weighted RLS recursion over the K frames, and
    the symbols are re-estimated from the final channel.
    """
    if not 0 < alpha <= 1:
        raise ValueError("forgetting factor must lie in (0, 1]")
    y = np.asarray(y)
    h = h_p.h_freq.copy()
    n, m_r, m_t = h.shape
    _require(m_r >= m_t, "RLSP needs M_R >= M_T")
    s = _project(pinv(h) @ y, constellation, known)
    p = np.broadcast_to(np.eye(m_t, dtype=np.complex128), (n, m_t, m_t)).copy()
    for k in range(y.shape[2]):
        sk = s[:, :, k, None]
        sh_p = sk.conj().transpose(0, 2, 1) @ p
        ps = p @ sk
        denom = alpha + (sh_p @ sk)[:, 0, 0]
        resid = y[:, :, k, None] - h @ sk
        h = h + resid @ sh_p / denom[:, None, None]
        p = (p - ps @ sh_p / denom[:, None, None]) / alpha
    s_soft = pinv(h) @ y
    return ReceiverOutput(
        _project(s_soft, constellation, known), s_soft, FreqChannelViews(h), iterations_used=y.shape[2]
    )


# -- Khatri-Rao coded MIMO-OFDM ---------------------------------------------


def _symbols_from_bar(s_bar, n, m_t):
    """K x M_T*N -> N x M_T x K."""
    return bar_to_blocks(s_bar, n, m_t).transpose(0, 2, 1)


def _despread(y, c_bar, m_t):
    """(1/M_T) (C̄ ⋄ (I_N ⊗ 1^T))^H [y]_([1,4],[3,2]), returned transposed (M_R*K x M_T*N)."""
    n, m_r, k, q = y.shape
    c = bar_to_blocks(c_bar, n, m_t)  # N x Q x M_T
    z = y.reshape(n, m_r * k, q) @ c.conj() / m_t  # rows k + K*r
    return blocks_to_bar(z)


def _resolve_scale(h_raw, reference):
    return safe_ratio_mean(h_raw, reference, axis=0, floor=DIV_FLOOR)


def kr_receiver(y, h_p: FreqChannelViews, c_bar, constellation=None, known=None) -> ReceiverOutput:
    """Despread, factor ``H̄ ⋄ S̄`` by LSKRF and fix the column scaling with the pilot channel."""
    y = np.asarray(y)
    n, m_r, k, q = y.shape
    m_t = h_p.m_t
    _require(q == m_t, "the Khatri-Rao receiver needs Q == M_T")
    krf = lskrf(_despread(y, c_bar, m_t), q=m_r, k=k)
    lam = _resolve_scale(krf.right, h_p.h_bar_mat)
    h_bar = krf.right / lam
    s_bar = krf.left * lam
    s_soft = _symbols_from_bar(s_bar, n, m_t)
    return ReceiverOutput(
        _project(s_soft, constellation, known),
        s_soft,
        FreqChannelViews(bar_to_blocks(h_bar, n, m_t)),
    )


def kr_ls_receiver(y, h_p: FreqChannelViews, c_bar, constellation, known=None) -> ReceiverOutput:
    """Khatri-Rao receiver followed by one least-squares channel refit from the projected symbols.

    The refined channel gives a new scaling estimate, which is applied to the
    raw LSKRF symbol factor.
    """
    y = np.asarray(y)
    n, m_r, k, q = y.shape
    m_t = h_p.m_t
    _require(q == m_t, "the Khatri-Rao receiver needs Q == M_T")
    krf = lskrf(_despread(y, c_bar, m_t), q=m_r, k=k)
    lam = _resolve_scale(krf.right, h_p.h_bar_mat)
    s_proj = _project(_symbols_from_bar(krf.left * lam, n, m_t), constellation, known)
    # per subcarrier: H_n^T = pinv(C_n ⋄ Q(S_n)) [y_n] with rows k + K*q
    c = bar_to_blocks(c_bar, n, m_t)
    g = _kr(c, s_proj.transpose(0, 2, 1))
    y_rows = y.transpose(0, 3, 2, 1).reshape(n, q * k, m_r)
    h_ls = (pinv(g) @ y_rows).transpose(0, 2, 1)
    lam_ls = _resolve_scale(krf.right, blocks_to_bar(h_ls))
    s_soft = _symbols_from_bar(krf.left * lam_ls, n, m_t)
    return ReceiverOutput(_project(s_soft, constellation, known), s_soft, FreqChannelViews(h_ls))


# -- randomly coded MIMO-OFDM -----------------------------------------------


def _rc_init(y, h_p):
    n, m_r, k, q = y.shape
    m_t = h_p.m_t
    _require(m_r >= m_t, "random-coding receivers need M_R >= M_T")
    y_rows = y.transpose(0, 3, 2, 1).reshape(n, q * k, m_r)
    z = y_rows @ pinv(h_p.h_freq.transpose(0, 2, 1))  # N x QK x M_T
    krf = lskrf(blocks_to_bar(z), q=q, k=k)
    anchor = krf.right[0]
    ok = np.abs(anchor) >= DIV_FLOOR * np.abs(anchor).max() if np.any(anchor) else np.zeros(anchor.shape, bool)
    lam = np.where(ok, anchor, 1.0)
    return krf.left * lam, krf.right / lam


def rc_kr_receiver(y, h_p: FreqChannelViews, constellation=None, known=None) -> ReceiverOutput:
    """LSKRF of the channel-equalized receive tensor, scaled by the all-ones first code row."""
    y = np.asarray(y)
    n, m_t = y.shape[0], h_p.m_t
    s_bar, c_bar = _rc_init(y, h_p)
    s_soft = _symbols_from_bar(s_bar, n, m_t)
    c_hat = c_bar
    if constellation is not None:
        c_hat = constellation.points[nearest_index(c_bar, constellation)]
        c_hat[0] = 1.0
    return ReceiverOutput(_project(s_soft, constellation, known), s_soft, h_p, c_hat)


def _reconstruct(h, s, c):
    return np.einsum("nrt,nkt,nqt->nrkq", h, s, c)


def _rel_cost(y, h, s, c, y_norm2):
    return float(np.sum(np.abs(y - _reconstruct(h, s, c)) ** 2) / y_norm2)


def rc_kr_als_receiver(
    y, h_p: FreqChannelViews, stop: StopRule, constellation, known=None, trace: bool = False
) -> ReceiverOutput:
    """RC-KR initialization followed by alternating least squares over channel, code and symbols.

    Each sweep updates the channel (only on subcarriers where ``C'_n ⋄ S_n``
    has full column rank), then the code matrix (projected, first row re-pinned
    to ones), then the symbols (projected). ``cost_history`` holds the relative
    fit measured right after the symbol LS step, before projection. With
    ``trace=True`` the fit after every individual step is kept in ``cost_trace``
    as ``(iteration, step, cost)``.
    """
    y = np.asarray(y)
    n, m_r, k, q = y.shape
    m_t = h_p.m_t
    _require(m_r * q >= m_t and m_r * k >= m_t, "ALS updates need M_R*Q >= M_T and M_R*K >= M_T")
    s_bar, c_bar = _rc_init(y, h_p)
    h = h_p.h_freq.copy()
    s = bar_to_blocks(s_bar, n, m_t)  # N x K x M_T
    c = bar_to_blocks(c_bar, n, m_t)  # N x Q x M_T
    if known is not None:
        known_blocks = (known[0].transpose(0, 2, 1), known[1].transpose(0, 2, 1))
    else:
        known_blocks = None

    y_qk_r = y.transpose(0, 3, 2, 1).reshape(n, q * k, m_r)
    y_kr_q = y.transpose(0, 2, 1, 3).reshape(n, k * m_r, q)
    y_qr_k = y.transpose(0, 3, 1, 2).reshape(n, q * m_r, k)
    y_norm2 = float(np.sum(np.abs(y) ** 2)) or 1.0

    history = []
    steps = []
    prev_cost = _rel_cost(y, h, s, c, y_norm2)
    if trace:
        steps.append((0, "init", prev_cost))
    converged = False
    it = 0
    while not converged and it < stop.max_iterations:
        it += 1
        g = _kr(c, s)
        full = numerical_rank(g, RANK_TOL) == m_t
        if full.any():
            h[full] = (pinv(g[full]) @ y_qk_r[full]).transpose(0, 2, 1)
        if trace:
            steps.append((it, "channel", _rel_cost(y, h, s, c, y_norm2)))

        c_soft = (pinv(_kr(s, h)) @ y_kr_q).transpose(0, 2, 1)
        c = constellation.points[nearest_index(c_soft, constellation)]
        c[:, 0, :] = 1.0
        if trace:
            steps.append((it, "code_ls", _rel_cost(y, h, s, c_soft, y_norm2)))
            steps.append((it, "code_proj", _rel_cost(y, h, s, c, y_norm2)))

        s_soft = (pinv(_kr(c, h)) @ y_qr_k).transpose(0, 2, 1)
        history.append(_rel_cost(y, h, s_soft, c, y_norm2))
        s = _project(s_soft, constellation, known_blocks)

        cost = _rel_cost(y, h, s, c, y_norm2)
        if trace:
            steps.append((it, "symbols_ls", history[-1]))
            steps.append((it, "symbols_proj", cost))
        if cost < stop.min_cost or np.isclose(cost, prev_cost, rtol=1e-9, atol=0.0):
            converged = True
        prev_cost = cost

    s_soft_grid = s_soft.transpose(0, 2, 1)
    return ReceiverOutput(
        s.transpose(0, 2, 1),
        s_soft_grid,
        FreqChannelViews(h),
        blocks_to_bar(c),
        iterations_used=it,
        converged=converged,
        cost_history=history,
        cost_trace=steps,
    )


# -- bookkeeping ------------------------------------------------------------


def flop_estimate(receiver: str, m_t: int, m_r: int, k: int) -> float:
    """Operations per subcarrier (and per iteration for ILSP/RLSP) from the closed-form cost model."""
    r = receiver.lower()
    zf = 2 / 3 * m_t**3 + 4 * m_t**2 * m_r + 2 * m_t * m_r**2 * k
    if r == "zf":
        return zf
    if r == "ilsp":
        return 4 / 3 * m_t**3 + 6 * m_t**2 * m_r + 2 * m_t * m_r**2 * k + 2 * m_t**2 * k + 2 * m_t * m_r * k
    if r == "rlsp":
        return zf + 2 * m_r * m_t * k + 2 * m_t**2 * m_r * k + 2 * m_t**2 * k
    raise ValueError(f"no cost model for receiver {receiver!r}; expected zf, ilsp or rlsp")


def count_symbol_errors(estimate, truth, constellation) -> int:
    """Number of positions whose hard decision differs from the transmitted point."""
    return int(np.count_nonzero(nearest_index(estimate, constellation) != nearest_index(truth, constellation)))
