"""Digital modulation alphabets: BPSK and square M-QAM with Gray mapping.

Every scheme is normalized to unit average symbol energy, so the channel
SNR definition downstream is sample-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConstellationScheme",
    "build_bpsk",
    "build_square_qam",
    "modulate",
    "demodulate_hard",
    "dump_constellation_csv",
]

_SUPPORTED_QAM = (4, 16, 64)


@dataclass(frozen=True)
class ConstellationScheme:
    """A modulation alphabet: M complex points plus a Gray bit mapping."""

    order: int
    points: np.ndarray  # complex128, shape (M,)
    bit_map: tuple[str, ...]  # length M, each log2(M) chars of '0'/'1'
    avg_power: float = field(default=1.0)

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.complex128))
        self.points.setflags(write=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))


def _gray(k: int) -> int:
    return k ^ (k >> 1)


def build_bpsk() -> ConstellationScheme:
    """Antipodal +1/-1 alphabet; the simplest unit-power scheme."""
    points = np.array([1.0 + 0.0j, -1.0 + 0.0j])
    return ConstellationScheme(order=2, points=points, bit_map=("0", "1"))


def build_square_qam(order: int) -> ConstellationScheme:
    """Square M-QAM on the grid {+-1, +-3, ...}^2, scaled to unit average power.

    The bit mapping is Gray-coded independently per axis, so axis-adjacent
    points differ in exactly one bit.
    """
    if order not in _SUPPORTED_QAM:
        raise ValueError(f"unsupported QAM order {order}; expected one of {_SUPPORTED_QAM}")
    side = int(round(np.sqrt(order)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)  # {-(L-1), ..., L-1}
    scale = 1.0 / np.sqrt(2.0 * np.mean(levels**2))  # unit average symbol energy
    bits_per_axis = int(np.log2(side))

    points = np.empty(order, dtype=np.complex128)
    bit_map = []
    for pi in range(side):
        for pq in range(side):
            m = pi * side + pq
            points[m] = scale * (levels[pi] + 1j * levels[pq])
            bi = format(_gray(pi), f"0{bits_per_axis}b")
            bq = format(_gray(pq), f"0{bits_per_axis}b")
            bit_map.append(bi + bq)
    return ConstellationScheme(order=order, points=points, bit_map=tuple(bit_map))


def modulate(indices: np.ndarray, scheme: ConstellationScheme) -> np.ndarray:
    """Map symbol indices to constellation points."""
    indices = np.asarray(indices, dtype=np.intp)
    if indices.size and (indices.min() < 0 or indices.max() >= scheme.order):
        raise ValueError("symbol index out of range")
    return scheme.points[indices]


def demodulate_hard(values: np.ndarray, scheme: ConstellationScheme) -> np.ndarray:
    """Nearest-point (minimum Euclidean distance) detection.

    Ties are broken toward the lowest index, which argmin already guarantees.
    """
    values = np.asarray(values, dtype=np.complex128)
    d2 = np.abs(values[..., None] - scheme.points) ** 2
    return np.argmin(d2, axis=-1)


def dump_constellation_csv(scheme: ConstellationScheme, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("index,re,im,bits\n")
        for m, (p, bits) in enumerate(zip(scheme.points, scheme.bit_map)):
            fh.write(f"{m},{p.real:.12g},{p.imag:.12g},{bits}\n")
