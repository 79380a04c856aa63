"""Doubly-dispersive multipath generation and the effective DD-domain channel.

A realization is a sparse set of paths, each with an integer delay tap, an
integer Doppler tap and a complex Gaussian gain.  Conjugating the resulting
time-domain operator with the DD <-> time unitary yields the dense effective
channel matrix consumed by every detector.  Fractional taps are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, TooManyPaths
from .grid import DdGridConfig, as_generator
from .transform import time_operator_to_dd

SPEED_OF_LIGHT_MPS = 2.998e8

JAKES_ROUNDED = "jakes_rounded"
UNIFORM_INTEGER = "uniform_integer"


@dataclass(frozen=True)
class ChannelConfig:
    """Multipath profile shared by every transmit/receive link.

    ``jakes_rounded`` draws Doppler shifts nu = nu_max*cos(theta) and rounds
    them to the grid; at coarse Doppler resolution most taps then collapse to
    zero, so ``uniform_integer`` is available to exercise nonzero taps at desk
    scale (the mode is recorded in all output metadata).  ``max_doppler_tap``
    optionally caps |k| below the natural range.
    """

    num_paths: int = 6
    max_speed_mps: float = 506.2 / 3.6
    doppler_mode: str = JAKES_ROUNDED
    max_doppler_tap: int | None = None

    def __post_init__(self):
        if self.num_paths < 1:
            raise ValueError("num_paths must be positive")
        if self.max_speed_mps < 0:
            raise ValueError("max_speed_mps must be nonnegative")
        if self.doppler_mode not in (JAKES_ROUNDED, UNIFORM_INTEGER):
            raise ValueError(f"unknown doppler_mode {self.doppler_mode!r}")

    def max_doppler_hz(self, grid: DdGridConfig) -> float:
        return self.max_speed_mps * grid.carrier_frequency_hz / SPEED_OF_LIGHT_MPS


@dataclass(frozen=True)
class PathSet:
    """One link realization: P gains with distinct (delay, Doppler) taps."""

    gains: np.ndarray        # complex, shape (P,)
    delay_taps: np.ndarray   # int, shape (P,), values in 0..M-1
    doppler_taps: np.ndarray # int, shape (P,), values in -floor(N/2)..ceil(N/2)-1

    @property
    def num_paths(self) -> int:
        return len(self.gains)


def doppler_tap_range(grid: DdGridConfig, cfg: ChannelConfig | None = None) -> tuple[int, int]:
    """Inclusive integer Doppler tap range, optionally capped by the config."""
    n = grid.n_doppler
    lo, hi = -(n // 2), (n - n // 2) - 1
    if cfg is not None and cfg.max_doppler_tap is not None:
        cap = abs(int(cfg.max_doppler_tap))
        lo, hi = max(lo, -cap), min(hi, cap)
    return lo, hi


def sample_paths(cfg: ChannelConfig, grid: DdGridConfig, rng) -> PathSet:
    """Draw one link realization.

    Delay taps are sampled without replacement from 0..M-1 with tap 0 forced
    (a line-of-sight-delay anchor), Doppler taps per ``cfg.doppler_mode``, and
    gains i.i.d. CN(0, 1/P) so the realization has unit average energy.
    Raises :class:`TooManyPaths` when P exceeds the number of delay taps.
    """
    gen = as_generator(rng)
    p = cfg.num_paths
    m = grid.m_delay
    if p > m:
        raise TooManyPaths(f"{p} paths but only {m} distinct delay taps")

    delays = np.zeros(p, dtype=int)
    if p > 1:
        delays[1:] = gen.choice(np.arange(1, m), size=p - 1, replace=False)

    lo, hi = doppler_tap_range(grid, cfg)
    if cfg.max_speed_mps == 0.0:
        dopplers = np.zeros(p, dtype=int)
    elif cfg.doppler_mode == JAKES_ROUNDED:
        theta = gen.uniform(0.0, 2.0 * np.pi, size=p)
        nu = cfg.max_doppler_hz(grid) * np.cos(theta)
        dopplers = np.clip(np.rint(nu * grid.frame_duration_s).astype(int), lo, hi)
    else:
        dopplers = gen.integers(lo, hi + 1, size=p)

    # Distinct delays already make the (l, k) pairs distinct; the redraw loop
    # guards the invariant should the delay rule ever change.
    for _ in range(100):
        pairs = delays * (2 * grid.n_doppler + 1) + (dopplers - lo)
        _, first = np.unique(pairs, return_index=True)
        if len(first) == p:
            break
        dup = np.setdiff1d(np.arange(p), first)
        if cfg.doppler_mode == JAKES_ROUNDED and cfg.max_speed_mps > 0.0:
            theta = gen.uniform(0.0, 2.0 * np.pi, size=len(dup))
            nu = cfg.max_doppler_hz(grid) * np.cos(theta)
            dopplers[dup] = np.clip(
                np.rint(nu * grid.frame_duration_s).astype(int), lo, hi
            )
        else:
            dopplers[dup] = gen.integers(lo, hi + 1, size=len(dup))

    gains = (gen.standard_normal(p) + 1j * gen.standard_normal(p)) * np.sqrt(0.5 / p)
    return PathSet(gains=gains, delay_taps=delays, doppler_taps=dopplers)


def sample_link_paths(
    cfg: ChannelConfig, grid: DdGridConfig, n_rx: int, n_branches: int, rng
) -> list[list[PathSet]]:
    """Independent realizations for every (receive, branch) link, row-major."""
    gen = as_generator(rng)
    return [
        [sample_paths(cfg, grid, gen) for _ in range(n_branches)]
        for _ in range(n_rx)
    ]


@dataclass(frozen=True)
class EffectiveChannel:
    """Dense DD-domain channel: (n_rx*NM) x (n_branches*NM).

    Rows are receive-antenna-major, columns branch-major, DD index within each
    block.  ``column(i, b)`` is the response of grid point i on branch b
    stacked across all receive antennas.
    """

    matrix: np.ndarray
    n_rx: int
    n_branches: int
    grid: DdGridConfig

    def block(self, rx: int, branch: int) -> np.ndarray:
        nm = self.grid.size
        return self.matrix[rx * nm:(rx + 1) * nm, branch * nm:(branch + 1) * nm]

    def column(self, grid_idx: int, branch: int) -> np.ndarray:
        return self.matrix[:, branch * self.grid.size + grid_idx]


def time_domain_operator(paths: PathSet, grid: DdGridConfig) -> np.ndarray:
    """NM x NM frame-cyclic delay/Doppler operator sum_i h_i D(k_i) Pi(l_i).

    Pi(l) is the cyclic delay shift over the N*M frame samples and
    D(k) = diag(exp(j 2 pi k n / NM)); one cyclic prefix per frame justifies
    the circulant wrap.
    """
    nm = grid.size
    op = np.zeros((nm, nm), dtype=complex)
    n_idx = np.arange(nm)
    for h, l, k in zip(paths.gains, paths.delay_taps, paths.doppler_taps):
        op[n_idx, (n_idx - l) % nm] += h * np.exp(2j * np.pi * k * n_idx / nm)
    return op


def effective_dd_channel(
    paths: Sequence[Sequence[PathSet]], grid: DdGridConfig
) -> EffectiveChannel:
    """Build the effective DD channel from per-(receive, branch) path sets.

    Each block equals U H_t U^H with U the time-to-DD unitary, so a single
    path (h=1, l=0, k=0) yields an identity block and the Frobenius norm of
    every block is NM * sum_i |h_i|^2 exactly.
    """
    n_rx = len(paths)
    if n_rx == 0:
        raise DimensionMismatch("need at least one receive antenna row")
    n_branches = len(paths[0])
    if any(len(row) != n_branches for row in paths):
        raise DimensionMismatch("ragged paths matrix")

    nm = grid.size
    ops = np.zeros((n_rx, n_branches, nm, nm), dtype=complex)
    for r in range(n_rx):
        for b in range(n_branches):
            ops[r, b] = time_domain_operator(paths[r][b], grid)
    blocks = time_operator_to_dd(ops, grid)
    matrix = blocks.transpose(0, 2, 1, 3).reshape(n_rx * nm, n_branches * nm)
    return EffectiveChannel(matrix=matrix, n_rx=n_rx, n_branches=n_branches, grid=grid)


def sample_link_arrays(
    cfg: ChannelConfig, grid: DdGridConfig, n_links: int, rng
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched link realizations: (gains, delays, dopplers), each (n_links, P).

    Statistically identical to ``n_links`` independent :func:`sample_paths`
    draws (distinct delay taps per link with tap 0 forced, Doppler per mode,
    CN(0, 1/P) gains) but issued as a handful of array draws, which is what
    the Monte Carlo hot path needs.
    """
    gen = as_generator(rng)
    p = cfg.num_paths
    m = grid.m_delay
    if p > m:
        raise TooManyPaths(f"{p} paths but only {m} distinct delay taps")

    delays = np.zeros((n_links, p), dtype=int)
    if p > 1:
        order = gen.random((n_links, m - 1)).argsort(axis=1)
        delays[:, 1:] = 1 + order[:, : p - 1]

    lo, hi = doppler_tap_range(grid, cfg)
    if cfg.max_speed_mps == 0.0:
        dopplers = np.zeros((n_links, p), dtype=int)
    elif cfg.doppler_mode == JAKES_ROUNDED:
        theta = gen.uniform(0.0, 2.0 * np.pi, size=(n_links, p))
        nu = cfg.max_doppler_hz(grid) * np.cos(theta)
        dopplers = np.clip(np.rint(nu * grid.frame_duration_s).astype(int), lo, hi)
    else:
        dopplers = gen.integers(lo, hi + 1, size=(n_links, p))

    gains = (
        gen.standard_normal((n_links, p)) + 1j * gen.standard_normal((n_links, p))
    ) * np.sqrt(0.5 / p)
    return gains, delays, dopplers


def effective_channel_from_arrays(
    gains: np.ndarray,
    delays: np.ndarray,
    dopplers: np.ndarray,
    grid: DdGridConfig,
    n_rx: int,
    n_branches: int,
) -> EffectiveChannel:
    """Assemble the effective channel from batched link arrays.

    Links are ordered receive-antenna-major (row r*n_branches + b describes
    receive antenna r, branch b); the construction per block is identical to
    :func:`effective_dd_channel`.
    """
    gains = np.asarray(gains)
    n_links, p = gains.shape
    if n_links != n_rx * n_branches:
        raise DimensionMismatch(
            f"{n_links} links do not cover {n_rx} x {n_branches}"
        )
    nm = grid.size
    ops = np.zeros((n_links, nm, nm), dtype=complex)
    n_idx = np.arange(nm)
    link_idx = np.arange(n_links)[:, None]
    for i in range(p):
        cols = (n_idx[None, :] - delays[:, i][:, None]) % nm
        vals = gains[:, i][:, None] * np.exp(
            2j * np.pi * dopplers[:, i][:, None] * n_idx[None, :] / nm
        )
        ops[link_idx, n_idx[None, :], cols] += vals
    blocks = time_operator_to_dd(ops, grid).reshape(n_rx, n_branches, nm, nm)
    matrix = blocks.transpose(0, 2, 1, 3).reshape(n_rx * nm, n_branches * nm)
    return EffectiveChannel(matrix=matrix, n_rx=n_rx, n_branches=n_branches, grid=grid)


def cim_grid_channels(grid: DdGridConfig, n_rx: int, rng) -> np.ndarray:
    """Per-grid flat Rayleigh vectors for the code-index receive model.

    Returns shape (NM, n_rx*NM) with i.i.d. CN(0, 1) entries; row v is the
    channel seen by every chip of grid point v, redrawn each frame.
    """
    gen = as_generator(rng)
    shape = (grid.size, n_rx * grid.size)
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * np.sqrt(0.5)


def kmh_to_mps(speed_kmh: float) -> float:
    return speed_kmh / 3.6
