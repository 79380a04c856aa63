"""Deterministic Monte Carlo BER engine.

Every frame draws its bits, channel and noise from a counter-based generator
keyed by (seed, SNR point, frame index), and error counters are integers, so
the sweep result is a pure function of the configuration and seed no matter
how frames are distributed over worker threads.  Frames are processed in
fixed-size batches and the stopping rule is evaluated at batch boundaries,
which keeps the frame count itself scheduling-independent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelConfig,
    cim_grid_channels,
    effective_channel_from_arrays,
    sample_link_arrays,
)
from .detect import detect_cim, detect_joint_ml, detect_per_grid_ml, detect_sic_refine
from .grid import DdGridConfig, Rng
from .schemes import (
    Cim,
    SchemeSpec,
    bits_per_frame,
    bits_per_grid,
    branch_count,
    constellation_for,
    demap_frame,
    map_frame,
    scheme_label,
    walsh_codes,
)

PER_GRID_ML = "per_grid_ml"
JOINT_ML = "joint_ml"
PER_GRID_ML_SIC = "per_grid_ml_sic"

_DETECTORS = (PER_GRID_ML, JOINT_ML, PER_GRID_ML_SIC)


@dataclass(frozen=True)
class SweepConfig:
    """Eb/N0 sweep control: SNR axis, stopping rule, seed and detector tier."""

    snr_points_db: tuple[float, ...]
    max_frames: int = 100_000
    min_bit_errors: int = 200
    seed: int = 0
    detector: str = PER_GRID_ML
    sic_sweeps: int = 1
    batch_frames: int = 32

    def __post_init__(self):
        points = tuple(float(p) for p in self.snr_points_db)
        object.__setattr__(self, "snr_points_db", points)
        if len(points) == 0:
            raise ValueError("need at least one SNR point")
        if any(b >= a for a, b in zip(points[1:], points)):
            raise ValueError("snr_points_db must be strictly increasing")
        if self.min_bit_errors < 1:
            raise ValueError("min_bit_errors must be >= 1")
        if self.max_frames < 1:
            raise ValueError("max_frames must be >= 1")
        if self.detector not in _DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")
        if self.sic_sweeps < 0:
            raise ValueError("sic_sweeps must be nonnegative")
        if self.batch_frames < 1:
            raise ValueError("batch_frames must be >= 1")


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    ber: float
    bits_sent: int
    bit_errors: int
    frames: int


@dataclass(frozen=True)
class BerCurve:
    """Sweep result plus a full provenance echo for serialization."""

    points: tuple[BerPoint, ...]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "points": [vars(p) for p in self.points],
        }


def calibrate_noise(spec: SchemeSpec, grid: DdGridConfig, ebn0_db: float) -> float:
    """Noise variance per complex receive-side DD sample at the given Eb/N0.

    With per-grid transmit energy normalized to 1 and b bits per grid point,
    Eb = 1/b, so sigma^2 = 1 / (b * 10^(Eb/N0 dB / 10)).  The same rule is
    applied to every scheme so equal-bpcu comparisons share a noise axis.
    """
    b = bits_per_grid(spec)
    if b == 0:
        raise ValueError("scheme carries no bits; cannot calibrate Eb")
    return 1.0 / (b * 10.0 ** (ebn0_db / 10.0))


def _complex_noise(gen: np.random.Generator, shape, sigma2: float) -> np.ndarray:
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * np.sqrt(
        sigma2 / 2.0
    )


def _run_frame(
    spec: SchemeSpec,
    chan_cfg: ChannelConfig,
    grid: DdGridConfig,
    n_rx: int,
    sigma2: float,
    sweep: SweepConfig,
    codebook,
    gen: np.random.Generator,
) -> int:
    """Simulate one frame and return its bit error count.

    Draw order is frozen (bits, channel, noise) so any detector tier sees
    identical realizations for identical seeds.
    """
    n_bits = bits_per_frame(spec, grid)
    bits = gen.integers(0, 2, size=n_bits)
    tx = map_frame(spec, bits, grid, codebook=codebook)

    if isinstance(spec, Cim):
        h = cim_grid_channels(grid, n_rx, gen)
        clean_i = h[:, :, None] * tx.chips_i[:, None, :]
        clean_q = h[:, :, None] * tx.chips_q[:, None, :]
        y_i = clean_i + _complex_noise(gen, clean_i.shape, sigma2)
        y_q = clean_q + _complex_noise(gen, clean_q.shape, sigma2)
        detected = detect_cim(y_i, y_q, codebook, h, constellation_for(spec))
    else:
        nb = branch_count(spec)
        gains, delays, dopplers = sample_link_arrays(chan_cfg, grid, n_rx * nb, gen)
        chan = effective_channel_from_arrays(gains, delays, dopplers, grid, n_rx, nb)
        y = chan.matrix @ tx.tx_matrix.reshape(-1)
        y += _complex_noise(gen, y.shape, sigma2)
        if sweep.detector == JOINT_ML:
            detected = detect_joint_ml(y, chan, spec)
        elif sweep.detector == PER_GRID_ML_SIC:
            initial = detect_per_grid_ml(y, chan, spec)
            detected = detect_sic_refine(y, chan, spec, initial, sweep.sic_sweeps)
        else:
            detected = detect_per_grid_ml(y, chan, spec)

    return int(np.count_nonzero(demap_frame(spec, detected.records) != bits))


def run_ber_sweep(
    spec: SchemeSpec,
    chan_cfg: ChannelConfig,
    grid: DdGridConfig,
    n_rx: int,
    sweep: SweepConfig,
    n_workers: int = 1,
) -> BerCurve:
    """Monte Carlo BER over the configured Eb/N0 points.

    Each point accumulates frames until ``min_bit_errors`` bit errors or
    ``max_frames`` frames, whichever first (checked at batch boundaries).
    The result is byte-identical for identical seeds regardless of
    ``n_workers``.
    """
    if n_rx < 1:
        raise ValueError("n_rx must be positive")
    rng = Rng(sweep.seed)
    codebook = (
        walsh_codes(spec.code_length, spec.n_codes) if isinstance(spec, Cim) else None
    )
    n_bits = bits_per_frame(spec, grid)

    pool = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    points = []
    try:
        for point_idx, snr_db in enumerate(sweep.snr_points_db):
            sigma2 = calibrate_noise(spec, grid, snr_db)

            def frame_errors(frame_idx: int) -> int:
                gen = rng.generator(counter=frame_idx, lane=point_idx)
                return _run_frame(
                    spec, chan_cfg, grid, n_rx, sigma2, sweep, codebook, gen
                )

            errors = 0
            frames = 0
            while frames < sweep.max_frames and errors < sweep.min_bit_errors:
                batch = min(sweep.batch_frames, sweep.max_frames - frames)
                indices = range(frames, frames + batch)
                if pool is not None:
                    results = list(pool.map(frame_errors, indices))
                else:
                    results = [frame_errors(i) for i in indices]
                errors += sum(results)
                frames += batch

            bits_sent = frames * n_bits
            points.append(
                BerPoint(
                    snr_db=snr_db,
                    ber=errors / bits_sent,
                    bits_sent=bits_sent,
                    bit_errors=errors,
                    frames=frames,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()

    config = {
        "scheme": scheme_label(spec),
        "scheme_params": vars(spec),
        "grid": vars(grid),
        "channel": vars(chan_cfg),
        "n_rx": n_rx,
        "sweep": {
            "snr_points_db": list(sweep.snr_points_db),
            "max_frames": sweep.max_frames,
            "min_bit_errors": sweep.min_bit_errors,
            "seed": sweep.seed,
            "detector": sweep.detector,
            "sic_sweeps": sweep.sic_sweeps,
            "batch_frames": sweep.batch_frames,
        },
        "noise_calibration": (
            "sigma^2 = 1/(bits_per_grid * 10^(EbN0_dB/10)) per complex DD sample, "
            "unit per-grid transmit energy"
        ),
    }
    return BerCurve(points=tuple(points), config=config)
