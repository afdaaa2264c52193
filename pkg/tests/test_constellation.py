import numpy as np
import pytest

from tensorofdm.constellation import demodulate, make_constellation, modulate_bits, psk, qam


@pytest.mark.parametrize("c", [qam(4), qam(16), qam(64), psk(2), psk(4), psk(8)], ids=lambda c: f"{c.kind}{c.order}")
def test_unit_energy_distinct(c):
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert len(np.unique(np.round(c.points, 12))) == c.order


@pytest.mark.parametrize("order", [4, 16, 64])
def test_qam_gray_neighbours_differ_by_one_bit(order):
    c = qam(order)
    d_min = min(abs(a - b) for i, a in enumerate(c.points) for b in c.points[i + 1 :])
    for i, a in enumerate(c.points):
        for j, b in enumerate(c.points):
            if i != j and abs(abs(a - b) - d_min) < 1e-9:
                assert bin(int(c.labels[i] ^ c.labels[j])).count("1") == 1


def test_psk_ring_gray():
    c = psk(8)
    order = np.argsort(np.angle(c.points) % (2 * np.pi))
    labels = c.labels[order]
    for a, b in zip(labels, np.roll(labels, -1)):
        assert bin(int(a ^ b)).count("1") == 1


@pytest.mark.parametrize("order", [4, 16])
def test_round_trip_every_symbol(order):
    c = qam(order)
    nb = c.bits_per_symbol
    bits = ((np.arange(order)[:, None] >> np.arange(nb - 1, -1, -1)) & 1).ravel()
    syms = modulate_bits(bits, c)
    assert len(np.unique(np.round(syms, 12))) == order
    np.testing.assert_array_equal(demodulate(syms, c), bits)


def test_random_bits_round_trip(rng):
    c = qam(16)
    bits = rng.integers(0, 2, 10_000)
    np.testing.assert_array_equal(demodulate(modulate_bits(bits, c), c), bits)


def test_bad_inputs():
    with pytest.raises(ValueError):
        modulate_bits([1, 0, 1], qam(4))
    with pytest.raises(ValueError):
        qam(8)
    with pytest.raises(ValueError):
        make_constellation("ask", 4)
    with pytest.raises(ValueError):
        psk(6)
