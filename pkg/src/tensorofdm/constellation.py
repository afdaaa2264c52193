"""Unit-energy QAM/PSK alphabets with Gray labelling."""

from dataclasses import dataclass, field

import numpy as np

from .linalg import nearest_index, project_alphabet

__all__ = ["Constellation", "qam", "psk", "make_constellation", "modulate_bits", "demodulate"]


def _gray(n: int) -> np.ndarray:
    i = np.arange(n)
    return i ^ (i >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Finite alphabet; ``points[i]`` carries the bit label ``labels[i]`` (MSB first)."""

    kind: str
    order: int
    points: np.ndarray
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.order < 2 or self.order & (self.order - 1):
            raise ValueError(f"modulation order must be a power of two >= 2, got {self.order}")
        if len(self.points) != self.order or len(np.unique(self.labels)) != self.order:
            raise ValueError("points and labels must both have `order` distinct entries")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    def project(self, m) -> np.ndarray:
        return project_alphabet(m, self)

    def random_symbols(self, rng, size) -> np.ndarray:
        return self.points[rng.integers(0, self.order, size=size)]


def qam(order: int) -> Constellation:
    """Square QAM, Gray coded independently on the I and Q rails."""
    side = int(round(np.sqrt(order)))
    if side * side != order or side < 2 or side & (side - 1):
        raise ValueError(f"square QAM needs an even power of two order, got {order}")
    half = side.bit_length() - 1
    levels = 2 * np.arange(side) - (side - 1)
    gray = _gray(side)
    # level index j carries Gray label gray[j] on its rail
    labels = np.empty(order, dtype=np.int64)
    points = np.empty(order, dtype=np.complex128)
    for i in range(side):
        for q in range(side):
            idx = i * side + q
            points[idx] = levels[i] + 1j * levels[q]
            labels[idx] = (gray[i] << half) | gray[q]
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation("qam", order, points, labels)


def psk(order: int) -> Constellation:
    k = np.arange(order)
    if order == 4:
        phases = np.pi / 4 + 2 * np.pi * k / order
    else:
        phases = 2 * np.pi * k / order
    return Constellation("psk", order, np.exp(1j * phases), _gray(order))


def make_constellation(kind: str, order: int) -> Constellation:
    kind = kind.lower()
    if kind == "qam":
        return qam(order)
    if kind == "psk":
        return psk(order)
    raise ValueError(f"unknown constellation kind {kind!r}")


def modulate_bits(bits, c: Constellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    nb = c.bits_per_symbol
    if bits.size % nb:
        raise ValueError(f"{bits.size} bits is not a multiple of {nb} bits per symbol")
    words = bits.reshape(-1, nb) @ (1 << np.arange(nb - 1, -1, -1))
    inverse = np.empty(c.order, dtype=np.int64)
    inverse[c.labels] = np.arange(c.order)
    return c.points[inverse[words]]


def demodulate(symbols, c: Constellation) -> np.ndarray:
    """Hard decision back to bits."""
    words = c.labels[nearest_index(np.asarray(symbols).ravel(), c)]
    nb = c.bits_per_symbol
    return ((words[:, None] >> np.arange(nb - 1, -1, -1)) & 1).ravel()
