import numpy as np
import pytest

from helpers import crandn
from tensorofdm.channel import (
    ChannelRealization,
    FreqChannelViews,
    PowerDelayProfile,
    antenna_permutation,
    dft_columns,
    draw_channel,
    ped_a,
    pilot_channel_estimate,
    selection_ones,
)
from tensorofdm.constellation import qam
from tensorofdm.tensor import generalized_unfold, identity_tensor, khatri_rao, n_mode_product, tensor_kron
from tensorofdm.transmit import PilotPattern, build_grid, transmit

# reference permutation for N=2 subcarriers, M_T=3 antennas, written out by hand
REFERENCE_P = np.array(
    [
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 1],
    ]
)


def random_views(rng, n=6, m_r=2, m_t=3):
    ch = draw_channel(rng, PowerDelayProfile.from_taps([0.5, 0.3, 0.2]), m_r, m_t, n)
    return ch, ch.views()


class TestProfile:
    def test_ped_a_sampling(self):
        p = ped_a()
        assert p.tap_delays_samples == (0, 1, 2, 4)
        assert p.n_taps == 5
        assert sum(p.tap_powers_linear) == pytest.approx(1.0, abs=1e-12)
        ratios = np.array(p.tap_powers_linear) / p.tap_powers_linear[0]
        np.testing.assert_allclose(10 * np.log10(ratios), [0, -9.7, -19.2, -22.8], atol=1e-12)

    def test_merging_taps_on_one_sample(self):
        p = PowerDelayProfile.from_ns([0, 40, 100], [0, 0, 0], 10e6)
        assert p.tap_delays_samples == (0, 1)
        np.testing.assert_allclose(p.tap_powers_linear, [2 / 3, 1 / 3])

    @pytest.mark.parametrize(
        "delays,powers", [((0, 0), (0.5, 0.5)), ((1, 0), (0.5, 0.5)), ((0, 1), (0.5, 0.6)), ((0,), (0.0,)), ((), ())]
    )
    def test_invalid(self, delays, powers):
        with pytest.raises(ValueError):
            PowerDelayProfile(delays, powers)


class TestDraw:
    def test_flat_single_tap(self, rng):
        ch = draw_channel(rng, PowerDelayProfile((0,), (1.0,)), 2, 2, 16)
        np.testing.assert_allclose(ch.freq_vectors, np.broadcast_to(ch.taps[0], (16, 2, 2)))

    def test_total_power(self):
        # 10^5 independent links in one draw
        ch = draw_channel(np.random.default_rng(7), ped_a(), 100, 1000, 8)
        power = np.sum(np.abs(ch.taps) ** 2, axis=0).mean()
        assert 0.99 <= power <= 1.01
        assert not ch.taps[3].any()

    def test_seeded(self):
        a = draw_channel(np.random.default_rng(3), ped_a(), 2, 2, 8)
        b = draw_channel(np.random.default_rng(3), ped_a(), 2, 2, 8)
        np.testing.assert_array_equal(a.taps, b.taps)

    def test_frequency_response_is_dft_of_taps(self, rng):
        ch, _ = random_views(rng, n=10)
        ref = np.zeros((10, 2, 3), complex)
        for n in range(10):
            for l in range(ch.n_taps):
                ref[n] += ch.taps[l] * np.exp(-2j * np.pi * n * l / 10)
        np.testing.assert_allclose(ch.freq_vectors, ref, atol=1e-12)
        np.testing.assert_allclose(ch.freq_vectors, np.fft.fft(ch.taps, 10, axis=0), atol=1e-12)


class TestViews:
    def test_siso_flat_tensor_is_identity(self):
        v = ChannelRealization(np.ones((1, 1, 1), complex), 5).views()
        np.testing.assert_array_equal(v.tensor_view[:, :, 0, 0], np.eye(5))

    def test_slices_diagonal(self, rng):
        _, v = random_views(rng)
        for r in range(2):
            for t in range(3):
                s = v.tensor_view[:, :, r, t]
                np.testing.assert_array_equal(s, np.diag(np.diag(s)))

    def test_matrix_column_orders(self, rng):
        _, v = random_views(rng, n=4, m_r=2, m_t=3)
        for n in range(4):
            for t in range(3):
                np.testing.assert_array_equal(v.h_tilde_mat[:, n + 4 * t], v.h_freq[n, :, t])
                np.testing.assert_array_equal(v.h_bar_mat[:, t + 3 * n], v.h_freq[n, :, t])

    def test_tilde_unfolding(self, rng):
        _, v = random_views(rng)
        ref = khatri_rao(v.h_tilde_mat, np.kron(np.ones((1, 3)), np.eye(6)))
        np.testing.assert_array_equal(generalized_unfold(v.tensor_view, [1, 3], [2, 4]), ref)

    def test_bar_unfolding(self, rng):
        _, v = random_views(rng)
        ref = khatri_rao(v.h_bar_mat, np.kron(np.eye(6), np.ones((1, 3))))
        np.testing.assert_array_equal(generalized_unfold(v.tensor_view, [1, 3], [4, 2]), ref)

    def test_bar_is_permuted_tilde(self, rng):
        _, v = random_views(rng)
        np.testing.assert_array_equal(v.h_tilde_mat @ antenna_permutation(6, 3), v.h_bar_mat)

    def test_block_structured_reconstruction(self, rng):
        _, v = random_views(rng, n=4, m_r=2, m_t=3)
        n, m_t = 4, 3
        core = tensor_kron(identity_tensor(4, m_t), identity_tensor(3, n))
        sel = np.kron(np.ones((1, m_t)), np.eye(n))
        t = n_mode_product(core, sel, 1)
        t = n_mode_product(t, sel, 2)
        t = n_mode_product(t, v.h_tilde_mat, 3)
        t = n_mode_product(t, np.eye(m_t), 4)
        np.testing.assert_allclose(t, v.tensor_view, atol=1e-12)

    def test_block_diagonal_support(self, rng):
        _, v = random_views(rng, n=5)
        m = generalized_unfold(v.tensor_view, [1, 3], [2, 4])
        rows, cols = np.nonzero(m)
        assert np.all(rows % 5 == cols % 5)

    def test_selection_matrix_identity(self):
        n, m_t = 3, 2
        core = tensor_kron(identity_tensor(4, m_t), identity_tensor(3, n))
        sel = np.kron(np.kron(np.eye(m_t), np.ones((m_t, 1))), np.eye(n))
        lhs = generalized_unfold(core, [1, 3], [2, 4]) @ sel
        e = np.eye(n * m_t)
        np.testing.assert_array_equal(lhs, khatri_rao(e, e))


class TestPermutation:
    def test_hand_written_example(self):
        # for N=3, M_T=2 the same matrix appears transposed
        np.testing.assert_array_equal(antenna_permutation(2, 3), REFERENCE_P)
        np.testing.assert_array_equal(antenna_permutation(3, 2), REFERENCE_P.T)

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("m_t", range(1, 7))
    def test_orthogonal_and_selection(self, n, m_t):
        p = antenna_permutation(n, m_t)
        np.testing.assert_array_equal(p @ p.T, np.eye(n * m_t))
        np.testing.assert_array_equal(np.kron(np.ones((1, m_t)), np.eye(n)) @ p, selection_ones(n, m_t))


class TestPilotEstimate:
    def _setup(self, rng, n, m_t, m_r, delta_f, taps, k=2):
        ch = draw_channel(rng, PowerDelayProfile.from_taps(taps), m_r, m_t, n)
        grid = build_grid(rng, n, m_t, k, PilotPattern(delta_f, k), qam(4))
        return ch, grid, transmit(grid.symbols, ch, len(taps))

    def test_every_subcarrier_piloted(self, rng):
        ch, grid, y = self._setup(rng, 16, 1, 2, 1, [0.5, 0.3, 0.2])
        est = pilot_channel_estimate(y, grid, 3)
        np.testing.assert_allclose(est.h_freq, ch.freq_vectors, atol=1e-10)

    def test_comb_exact_when_enough_pilots(self, rng):
        ch, grid, y = self._setup(rng, 12, 2, 2, 3, [0.5, 0.3, 0.2])
        est = pilot_channel_estimate(y, grid, 3)
        np.testing.assert_allclose(est.h_freq, ch.freq_vectors, atol=1e-10)

    def test_too_few_pilots(self, rng):
        ch, grid, y = self._setup(rng, 12, 2, 2, 4, [0.2] * 5)
        with pytest.raises(ValueError, match="fewer than"):
            pilot_channel_estimate(y, grid, 5)

    def test_noise_matches_least_squares_variance(self, rng):
        # equispaced unit-modulus pilots make the LS normal matrix P*I, so the
        # interpolated error variance per entry is sigma2 * L / P
        n, delta_f, taps = 120, 3, [0.5, 0.3, 0.2]
        sigma2 = 1e-3
        errs = []
        for _ in range(200):
            ch, grid, y = self._setup(rng, n, 1, 1, delta_f, taps, k=1)
            y = y + np.sqrt(sigma2 / 2) * crandn(rng, *y.shape)
            errs.append(pilot_channel_estimate(y, grid, 3).h_freq - ch.freq_vectors)
        var = np.mean(np.abs(np.array(errs)) ** 2)
        assert var == pytest.approx(sigma2 * 3 / (n // delta_f), rel=0.1)

    def test_coded_requires_weights(self, rng):
        _, grid, y = self._setup(rng, 12, 2, 2, 3, [1.0])
        with pytest.raises(ValueError):
            pilot_channel_estimate(y[..., None], grid, 1)


def test_dft_columns_rows():
    np.testing.assert_allclose(dft_columns(8, 3, [1, 5]), dft_columns(8, 3)[[1, 5]])


def test_views_shape_properties(rng):
    v = FreqChannelViews(crandn(rng, 4, 3, 2))
    assert (v.n, v.m_r, v.m_t) == (4, 3, 2)
    assert v.tensor_view.shape == (4, 4, 3, 2)
