"""Bit-to-frame mappers for OTFS and its five index-modulation variants.

Each scheme maps a per-grid bit group onto a grid record (symbol index plus
whatever resource indices the scheme activates) and onto one column of the
B x NM transmit matrix.  The frozen bit-group order within a grid is symbol
bits first, then index bits (real-part antenna before imaginary-part for the
quadrature scheme, in-phase code before quadrature code for the code-index
scheme), grids processed in DD vectorization order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import hadamard

from .errors import (
    CodebookMismatch,
    IndexOutOfRange,
    InvalidSize,
    WrongBitCount,
)
from .grid import Constellation, DdGridConfig, cached_constellation


def _require_power_of_two(value: int, name: str, minimum: int = 1) -> None:
    if value < minimum or (value & (value - 1)) != 0:
        raise ValueError(f"{name} must be a power of two >= {minimum}, got {value}")


@dataclass(frozen=True)
class Otfs:
    """Plain OTFS: every grid point carries one constellation symbol."""
    mod_order: int

    def __post_init__(self):
        _require_power_of_two(self.mod_order, "mod_order", 2)


@dataclass(frozen=True)
class Ssk:
    """Space shift keying: bits select which antenna transmits a bare 1."""
    n_antennas: int

    def __post_init__(self):
        _require_power_of_two(self.n_antennas, "n_antennas", 2)


@dataclass(frozen=True)
class Sm:
    """Spatial modulation: one symbol on one bit-selected antenna."""
    n_antennas: int
    mod_order: int

    def __post_init__(self):
        _require_power_of_two(self.n_antennas, "n_antennas", 1)
        _require_power_of_two(self.mod_order, "mod_order", 2)


@dataclass(frozen=True)
class Qsm:
    """Quadrature spatial modulation: real and imaginary parts of the symbol
    are placed on independently selected antennas."""
    n_antennas: int
    mod_order: int

    def __post_init__(self):
        _require_power_of_two(self.n_antennas, "n_antennas", 1)
        _require_power_of_two(self.mod_order, "mod_order", 2)


@dataclass(frozen=True)
class Mbm:
    """Media-based modulation: n_mirrors RF mirrors span 2^n_mirrors mirror
    activation patterns, each an independent channel realization."""
    n_mirrors: int
    mod_order: int

    def __post_init__(self):
        if self.n_mirrors < 1:
            raise ValueError("n_mirrors must be positive")
        _require_power_of_two(self.mod_order, "mod_order", 2)


@dataclass(frozen=True)
class Cim:
    """Code index modulation: bits pick one of n_codes orthogonal spreading
    codes for each of the I and Q branches, plus a constellation symbol."""
    n_codes: int
    code_length: int
    mod_order: int

    def __post_init__(self):
        _require_power_of_two(self.n_codes, "n_codes", 2)
        _require_power_of_two(self.code_length, "code_length", 1)
        _require_power_of_two(self.mod_order, "mod_order", 2)
        if self.n_codes > self.code_length:
            raise ValueError("n_codes cannot exceed code_length")


SchemeSpec = Union[Otfs, Ssk, Sm, Qsm, Mbm, Cim]

_LABELS = {
    Otfs: "OTFS",
    Ssk: "OTFS-SSK",
    Sm: "OTFS-SM",
    Qsm: "OTFS-QSM",
    Mbm: "OTFS-MBM",
    Cim: "OTFS-CIM",
}

_RECORD_FIELDS = {
    Otfs: ("symbol",),
    Ssk: ("branch",),
    Sm: ("symbol", "branch"),
    Qsm: ("symbol", "branch_re", "branch_im"),
    Mbm: ("symbol", "map"),
    Cim: ("symbol", "code_re", "code_im"),
}


def scheme_label(spec: SchemeSpec) -> str:
    return _LABELS[type(spec)]


def record_fields(spec: SchemeSpec) -> tuple[str, ...]:
    """Column names of the (NM, F) integer record array, mapping order."""
    return _RECORD_FIELDS[type(spec)]


def bits_per_grid(spec: SchemeSpec) -> int:
    """Payload bits carried by a single DD grid point."""
    log2 = lambda v: v.bit_length() - 1
    if isinstance(spec, Otfs):
        return log2(spec.mod_order)
    if isinstance(spec, Ssk):
        return log2(spec.n_antennas)
    if isinstance(spec, Sm):
        return log2(spec.mod_order) + log2(spec.n_antennas)
    if isinstance(spec, Qsm):
        return log2(spec.mod_order) + 2 * log2(spec.n_antennas)
    if isinstance(spec, Mbm):
        return log2(spec.mod_order) + spec.n_mirrors
    if isinstance(spec, Cim):
        return log2(spec.mod_order) + 2 * log2(spec.n_codes)
    raise TypeError(f"unknown scheme {spec!r}")


def bits_per_frame(spec: SchemeSpec, grid: DdGridConfig) -> int:
    """Spectral efficiency in bits per OTFS frame (NM grid points)."""
    return grid.size * bits_per_grid(spec)


def branch_count(spec: SchemeSpec) -> int:
    """Transmit branches: antennas, mirror patterns, or 1."""
    if isinstance(spec, (Ssk, Sm, Qsm)):
        return spec.n_antennas
    if isinstance(spec, Mbm):
        return 1 << spec.n_mirrors
    return 1


def constellation_for(spec: SchemeSpec) -> Constellation | None:
    """The scheme's symbol constellation (None for the index-only scheme)."""
    if isinstance(spec, Ssk):
        return None
    return cached_constellation(spec.mod_order)


@dataclass(frozen=True)
class WalshCodeBook:
    """First n_codes rows of the order-L Sylvester-Hadamard matrix / sqrt(L).

    Rows are pairwise orthonormal with entries +-1/sqrt(L).
    """

    codes: np.ndarray  # (n_codes, code_length) float

    @property
    def n_codes(self) -> int:
        return self.codes.shape[0]

    @property
    def code_length(self) -> int:
        return self.codes.shape[1]


def walsh_codes(code_length: int, n_codes: int) -> WalshCodeBook:
    """Build the spreading-code book; raises :class:`InvalidSize` on bad sizes."""
    if code_length < 1 or (code_length & (code_length - 1)) != 0:
        raise InvalidSize(f"code_length must be a power of two, got {code_length}")
    if not 1 <= n_codes <= code_length:
        raise InvalidSize(f"n_codes must be in 1..{code_length}, got {n_codes}")
    h = hadamard(code_length).astype(float)
    return WalshCodeBook(codes=h[:n_codes] / np.sqrt(code_length))


def _check_codebook(spec: Cim, codebook: WalshCodeBook | None) -> WalshCodeBook:
    if codebook is None:
        raise CodebookMismatch("code-index mapping requires a Walsh code book")
    if codebook.n_codes < spec.n_codes or codebook.code_length != spec.code_length:
        raise CodebookMismatch(
            f"code book {codebook.n_codes}x{codebook.code_length} does not cover "
            f"scheme ({spec.n_codes}, {spec.code_length})"
        )
    return codebook


@dataclass(frozen=True)
class TxFrame:
    """Mapped frame: per-grid records plus the B x NM transmit matrix.

    For the code-index scheme the spread I/Q chip sequences (NM, L) are
    carried alongside; other schemes leave them None.
    """

    records: np.ndarray          # (NM, F) int
    tx_matrix: np.ndarray        # (branches, NM) complex
    chips_i: np.ndarray | None = None
    chips_q: np.ndarray | None = None


def _bits_to_ints(bits: np.ndarray, width: int) -> np.ndarray:
    """Big-endian bit chunks -> integers; bits shaped (NM, width)."""
    if width == 0:
        return np.zeros(bits.shape[0], dtype=int)
    weights = 1 << np.arange(width - 1, -1, -1)
    return bits @ weights


def _ints_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1)
    return (values[:, None] >> shifts) & 1


def _split_bit_groups(spec: SchemeSpec, bits_grid: np.ndarray) -> np.ndarray:
    """Per-grid bit groups -> integer record columns, symbol field first."""
    widths = _field_widths(spec)
    cols = []
    offset = 0
    for w in widths:
        cols.append(_bits_to_ints(bits_grid[:, offset:offset + w], w))
        offset += w
    return np.stack(cols, axis=1)


def _field_widths(spec: SchemeSpec) -> tuple[int, ...]:
    log2 = lambda v: v.bit_length() - 1
    if isinstance(spec, Otfs):
        return (log2(spec.mod_order),)
    if isinstance(spec, Ssk):
        return (log2(spec.n_antennas),)
    if isinstance(spec, Sm):
        return (log2(spec.mod_order), log2(spec.n_antennas))
    if isinstance(spec, Qsm):
        la = log2(spec.n_antennas)
        return (log2(spec.mod_order), la, la)
    if isinstance(spec, Mbm):
        return (log2(spec.mod_order), spec.n_mirrors)
    if isinstance(spec, Cim):
        lc = log2(spec.n_codes)
        return (log2(spec.mod_order), lc, lc)
    raise TypeError(f"unknown scheme {spec!r}")


def _field_limits(spec: SchemeSpec) -> tuple[int, ...]:
    return tuple(1 << w for w in _field_widths(spec))


def map_frame(
    spec: SchemeSpec,
    bits: np.ndarray,
    grid: DdGridConfig,
    codebook: WalshCodeBook | None = None,
) -> TxFrame:
    """Map a frame's bit vector onto grid records and the transmit matrix.

    Column structure per scheme: exactly one nonzero for the single-antenna
    and antenna/mirror-index schemes; at most two nonzeros (one carrying the
    real part, one the imaginary part) for the quadrature scheme, coincident
    when both indices agree.  Per-grid average transmit energy is 1.
    Raises :class:`WrongBitCount` on a mismatched payload length.
    """
    bits = np.asarray(bits, dtype=int).reshape(-1)
    expected = bits_per_frame(spec, grid)
    if len(bits) != expected:
        raise WrongBitCount(f"expected {expected} bits, got {len(bits)}")
    nm = grid.size
    records = _split_bit_groups(spec, bits.reshape(nm, bits_per_grid(spec)))
    const = constellation_for(spec)

    if isinstance(spec, Ssk):
        tx = np.zeros((spec.n_antennas, nm), dtype=complex)
        tx[records[:, 0], np.arange(nm)] = 1.0
        return TxFrame(records=records, tx_matrix=tx)

    symbols = const.points[records[:, 0]]

    if isinstance(spec, Otfs):
        return TxFrame(records=records, tx_matrix=symbols[None, :].copy())

    if isinstance(spec, Sm):
        tx = np.zeros((spec.n_antennas, nm), dtype=complex)
        tx[records[:, 1], np.arange(nm)] = symbols
        return TxFrame(records=records, tx_matrix=tx)

    if isinstance(spec, Qsm):
        tx = np.zeros((spec.n_antennas, nm), dtype=complex)
        cols = np.arange(nm)
        np.add.at(tx, (records[:, 1], cols), symbols.real)
        np.add.at(tx, (records[:, 2], cols), 1j * symbols.imag)
        return TxFrame(records=records, tx_matrix=tx)

    if isinstance(spec, Mbm):
        tx = np.zeros((1 << spec.n_mirrors, nm), dtype=complex)
        tx[records[:, 1], np.arange(nm)] = symbols
        return TxFrame(records=records, tx_matrix=tx)

    if isinstance(spec, Cim):
        codebook = _check_codebook(spec, codebook)
        chips_i = symbols.real[:, None] * codebook.codes[records[:, 1]]
        chips_q = symbols.imag[:, None] * codebook.codes[records[:, 2]]
        return TxFrame(
            records=records,
            tx_matrix=symbols[None, :].copy(),
            chips_i=chips_i,
            chips_q=chips_q,
        )

    raise TypeError(f"unknown scheme {spec!r}")


def demap_frame(spec: SchemeSpec, records: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`map_frame` on the record level.

    Raises :class:`IndexOutOfRange` when a record index exceeds its range.
    """
    records = np.asarray(records, dtype=int)
    widths = _field_widths(spec)
    limits = _field_limits(spec)
    if records.ndim != 2 or records.shape[1] != len(widths):
        raise IndexOutOfRange(
            f"records shape {records.shape} does not match scheme fields {record_fields(spec)}"
        )
    chunks = []
    for col, (w, limit, name) in enumerate(zip(widths, limits, record_fields(spec))):
        values = records[:, col]
        if values.min(initial=0) < 0 or values.max(initial=0) >= limit:
            raise IndexOutOfRange(f"record field {name!r} outside 0..{limit - 1}")
        chunks.append(_ints_to_bits(values, w))
    return np.concatenate(chunks, axis=1).reshape(-1)
