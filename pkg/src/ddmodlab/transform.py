"""Conversion between the delay-Doppler grid and the time-domain frame.

With rectangular transmit/receive pulses and critical sampling (M samples per
symbol slot) the ISFFT + Heisenberg chain collapses to the inverse discrete
Zak transform: a unitary inverse N-point DFT across the Doppler axis and the
identity across delay.  The receive side (Wigner + SFFT) is its exact inverse.

Vectorization order is frozen as delay-major within each Doppler slot:
sample/grid index n = k*M + l, which is C-order flattening of an (N, M) array.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .grid import DdGridConfig


def _check_frame(frame: np.ndarray, grid: DdGridConfig) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.shape != (grid.n_doppler, grid.m_delay):
        raise DimensionMismatch(
            f"frame shape {frame.shape} does not match grid "
            f"({grid.n_doppler}, {grid.m_delay})"
        )
    return frame


def dd_to_time(frame: np.ndarray, grid: DdGridConfig) -> np.ndarray:
    """Map an (N, M) delay-Doppler frame to the length-N*M time signal.

    Unitary: total energy is preserved exactly, and
    ``time_to_dd(dd_to_time(x)) == x`` to machine precision.
    """
    frame = _check_frame(frame, grid)
    return np.fft.ifft(frame, axis=0, norm="ortho").reshape(-1)


def time_to_dd(signal: np.ndarray, grid: DdGridConfig) -> np.ndarray:
    """Map a length-N*M time signal back to the (N, M) delay-Doppler frame."""
    signal = np.asarray(signal)
    if signal.shape != (grid.size,):
        raise DimensionMismatch(
            f"signal length {signal.shape} does not match grid size {grid.size}"
        )
    return np.fft.fft(signal.reshape(grid.n_doppler, grid.m_delay), axis=0, norm="ortho")


def time_to_dd_operator(grid: DdGridConfig) -> np.ndarray:
    """Dense N*M x N*M unitary taking time samples to the DD vectorization.

    Equals (F_N (x) I_M) with the unitary DFT F_N; its conjugate transpose is
    the DD-to-time operator.  Used to conjugate time-domain channel operators
    into the DD domain.
    """
    n, m = grid.n_doppler, grid.m_delay
    f = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    return np.kron(f, np.eye(m))


def time_operator_to_dd(op: np.ndarray, grid: DdGridConfig) -> np.ndarray:
    """Conjugate a time-domain NM x NM operator into the DD domain: U H U^H.

    Implemented with FFTs along the slot axes; supports stacked operators of
    shape (..., NM, NM).
    """
    n, m = grid.n_doppler, grid.m_delay
    op = np.asarray(op, dtype=complex)
    if op.shape[-2:] != (grid.size, grid.size):
        raise DimensionMismatch(
            f"operator shape {op.shape} does not match grid size {grid.size}"
        )
    lead = op.shape[:-2]
    blocks = op.reshape(lead + (n, m, n, m))
    blocks = np.fft.fft(blocks, axis=-4, norm="ortho")
    blocks = np.fft.ifft(blocks, axis=-2, norm="ortho")
    return blocks.reshape(lead + (grid.size, grid.size))
