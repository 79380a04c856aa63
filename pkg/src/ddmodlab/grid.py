"""Delay-Doppler grid geometry, constellations and deterministic randomness.

Everything downstream (transforms, channels, mappers, the BER engine) shares
the three building blocks defined here:

* :class:`DdGridConfig` - the N x M delay-Doppler grid and its derived
  time/frequency quantities.
* :class:`Constellation` - unit-average-energy, Gray-labeled QAM/PSK sets.
* :class:`Rng` - counter-based randomness so that parallel execution order
  can never change a result.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UnsupportedOrder

QAM = "qam"
PSK = "psk"


@dataclass(frozen=True)
class DdGridConfig:
    """Geometry of one delay-Doppler frame.

    ``n_doppler`` time slots (Doppler bins) by ``m_delay`` subcarriers
    (delay bins).  Durations and resolutions are always derived from the
    subcarrier spacing, never stored separately.
    """

    n_doppler: int
    m_delay: int
    subcarrier_spacing_hz: float = 15e3
    carrier_frequency_hz: float = 4e9

    def __post_init__(self):
        if self.n_doppler < 1 or self.m_delay < 1:
            raise ValueError("grid dimensions must be positive integers")
        if self.subcarrier_spacing_hz <= 0 or self.carrier_frequency_hz <= 0:
            raise ValueError("spacing and carrier frequency must be positive")

    @property
    def size(self) -> int:
        """Number of grid points N*M (= samples per frame)."""
        return self.n_doppler * self.m_delay

    @property
    def symbol_duration_s(self) -> float:
        """T = 1/delta_f, so T*delta_f = 1 exactly."""
        return 1.0 / self.subcarrier_spacing_hz

    @property
    def frame_duration_s(self) -> float:
        return self.n_doppler * self.symbol_duration_s

    @property
    def bandwidth_hz(self) -> float:
        return self.m_delay * self.subcarrier_spacing_hz

    @property
    def delay_resolution_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def doppler_resolution_hz(self) -> float:
        return 1.0 / self.frame_duration_s


@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy constellation with Gray bit labels.

    ``points[label]`` is the complex symbol carrying the bit pattern
    ``label`` (big-endian).  Mean |point|^2 over the set is exactly 1.
    """

    order: int
    kind: str
    points: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    def nearest(self, values: np.ndarray) -> np.ndarray:
        """Hard-decide each value to the label of the closest point."""
        values = np.asarray(values)
        d2 = np.abs(values[..., None] - self.points) ** 2
        return d2.argmin(axis=-1)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _pam_levels_and_labels(m_bits: int) -> tuple[np.ndarray, np.ndarray]:
    """Gray-labeled 2^m PAM axis, ascending levels -(2^m-1)..+(2^m-1).

    Labels are the standard reflected Gray sequence XOR-shifted so the
    all-zero pattern lands on level +1; XOR by a constant preserves the
    one-bit-per-step adjacency.
    """
    n = 1 << m_bits
    levels = np.arange(-(n - 1), n, 2, dtype=float)
    anchor = _gray(n // 2)  # index of level +1
    labels = np.array([_gray(i) ^ anchor for i in range(n)])
    return levels, labels


def _build_qam(order: int) -> np.ndarray:
    m_axis = order.bit_length() - 1
    if m_axis % 2 != 0:
        raise UnsupportedOrder(
            f"{order}-QAM has no square lattice; use PSK for this order"
        )
    m_axis //= 2
    levels, labels = _pam_levels_and_labels(m_axis)
    points = np.empty(order, dtype=complex)
    for ii, li in enumerate(labels):
        for iq, lq in enumerate(labels):
            points[(li << m_axis) | lq] = levels[ii] + 1j * levels[iq]
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def _build_psk(order: int) -> np.ndarray:
    if order == 2:
        # Antipodal pair ordered so bit b maps to 2b-1.
        return np.array([-1.0 + 0j, 1.0 + 0j])
    points = np.empty(order, dtype=complex)
    for i in range(order):
        points[_gray(i)] = np.exp(2j * np.pi * i / order)
    return points


def build_constellation(order: int, kind: str = QAM) -> Constellation:
    """Build a Gray-labeled, unit-average-energy constellation.

    ``order`` must be a power of two >= 2.  QAM requires a square lattice
    (order 4, 16, 64, ...); order 2 is always the antipodal BPSK pair.
    Raises :class:`UnsupportedOrder` otherwise.
    """
    kind = kind.lower()
    if kind not in (QAM, PSK):
        raise ValueError(f"unknown constellation kind {kind!r}")
    if not _is_power_of_two(order) or order < 2:
        raise UnsupportedOrder(f"order must be a power of two >= 2, got {order}")
    if order == 2 or kind == PSK:
        points = _build_psk(order)
        kind = PSK
    else:
        points = _build_qam(order)
    return Constellation(order=order, kind=kind, points=points)


def default_constellation_kind(order: int) -> str:
    """QAM whenever a square lattice exists, PSK otherwise (and for order 2)."""
    if order == 2:
        return PSK
    if _is_power_of_two(order) and (order.bit_length() - 1) % 2 == 0:
        return QAM
    return PSK


@lru_cache(maxsize=None)
def cached_constellation(order: int, kind: str | None = None) -> Constellation:
    """Memoized constellation lookup used by the mappers and detectors."""
    if kind is None:
        kind = default_constellation_kind(order)
    return build_constellation(order, kind)


@dataclass(frozen=True)
class Rng:
    """Counter-based random source.

    Identical ``(seed, stream_id)`` produce identical draw sequences on every
    platform.  Independent generators for e.g. different Monte Carlo frames
    are obtained by moving the Philox counter, not by consuming draws, so
    results cannot depend on scheduling or worker count.
    """

    seed: int
    stream_id: int = 0

    def generator(self, counter: int = 0, lane: int = 0) -> np.random.Generator:
        """Fresh generator at position (counter, lane) of this stream.

        Distinct (counter, lane) pairs are separated by 2^128 Philox states,
        so their draw sequences never overlap.
        """
        key = [self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF]
        bg = np.random.Philox(key=key, counter=[0, 0, counter, lane])
        return np.random.Generator(bg)

    def stream(self, stream_id: int) -> "Rng":
        return Rng(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    """Accept either an Rng or a ready numpy Generator."""
    if isinstance(rng, Rng):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected Rng or numpy Generator, got {type(rng)!r}")
