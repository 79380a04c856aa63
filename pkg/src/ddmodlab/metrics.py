"""Closed-form performance calculators and the capacity Monte Carlo.

Detector complexity is counted in real multiplications (RMs): one complex
multiply is 4 RMs and one squared norm is 2 RMs per entry, giving the
per-candidate cost of 8 * n_rx * NM that all per-grid formulas share.  The
formulas are reported analytically here and cross-checked in the test suite
against hypothesis counts measured from the detectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeSaving
from .grid import DdGridConfig, as_generator
from .schemes import (
    Cim,
    Mbm,
    Otfs,
    Qsm,
    SchemeSpec,
    Sm,
    Ssk,
    bits_per_frame,
    scheme_label,
)


def per_candidate_rm_cost(n_rx: int, grid: DdGridConfig) -> int:
    """RMs per ML hypothesis: a length-n_rx*NM complex scale plus its norm."""
    return 8 * n_rx * grid.size


def ml_complexity_rms(spec: SchemeSpec, n_rx: int, grid: DdGridConfig) -> int:
    """Per-frame detector complexity in real multiplications.

    The quadrature scheme is charged like plain spatial modulation (the
    convention under which it comes out cheapest at equal spectral
    efficiency); the code-index scheme pays for despreading every code over
    both branches plus a per-symbol ML stage.
    """
    nm = grid.size
    base = 8 * n_rx * nm * nm
    if isinstance(spec, Otfs):
        return base * spec.mod_order
    if isinstance(spec, Ssk):
        return base * spec.n_antennas
    if isinstance(spec, (Sm, Qsm)):
        return base * spec.mod_order * spec.n_antennas
    if isinstance(spec, Mbm):
        return base * spec.mod_order * (1 << spec.n_mirrors)
    if isinstance(spec, Cim):
        despread = 8 * spec.n_codes * spec.code_length * (n_rx * nm) ** 2
        symbol = 8 * n_rx * nm * spec.mod_order
        return nm * (despread + symbol)
    raise TypeError(f"unknown scheme {spec!r}")


def energy_saving_pct(
    im_spec: SchemeSpec, baseline: Otfs, grid: DdGridConfig
) -> float:
    """Percent transmit-energy saving of an index scheme over plain OTFS.

    100 * (1 - eta_baseline / eta_im); raises :class:`NegativeSaving` when
    the index scheme carries fewer bits per frame than the baseline.
    """
    if not isinstance(baseline, Otfs):
        raise ValueError("baseline must be a plain OTFS spec")
    eta_base = bits_per_frame(baseline, grid)
    eta_im = bits_per_frame(im_spec, grid)
    if eta_im < eta_base:
        raise NegativeSaving(
            f"{scheme_label(im_spec)} carries {eta_im} bits/frame, "
            f"below the baseline {eta_base}"
        )
    return 100.0 * (1.0 - eta_base / eta_im)


def throughput(ber: float, se_bits: float, tx_duration_s: float) -> float:
    """Error-discounted throughput in bits/s: (1 - BER) * bits / duration."""
    if not 0.0 <= ber <= 1.0:
        raise ValueError("ber must lie in [0, 1]")
    if se_bits <= 0 or tx_duration_s <= 0:
        raise ValueError("se_bits and tx_duration_s must be positive")
    return (1.0 - ber) * se_bits / tx_duration_s


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo mean with its standard error."""

    bits_per_s_hz: float
    stderr: float
    trials: int


def ergodic_capacity(
    n_tx: int,
    n_rx: int,
    snr_linear: float,
    trials: int,
    rng,
    chunk: int = 1 << 16,
) -> CapacityEstimate:
    """Equal-power ergodic MIMO capacity over i.i.d. CN(0,1) channels.

    Averages log2 det(I + (rho/n_tx) H H^H) over ``trials`` draws; the
    transmitter has no channel knowledge, so power splits evenly across the
    n_tx inputs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_tx < 1 or n_rx < 1:
        raise ValueError("antenna counts must be positive")
    if snr_linear < 0:
        raise ValueError("snr_linear must be nonnegative")
    gen = as_generator(rng)

    total = 0.0
    total_sq = 0.0
    done = 0
    scale = snr_linear / n_tx
    eye = np.eye(n_rx)
    while done < trials:
        n = min(chunk, trials - done)
        h = (
            gen.standard_normal((n, n_rx, n_tx))
            + 1j * gen.standard_normal((n, n_rx, n_tx))
        ) * np.sqrt(0.5)
        gram = eye[None, :, :] + scale * (h @ h.conj().transpose(0, 2, 1))
        _, logdet = np.linalg.slogdet(gram)
        vals = logdet / np.log(2.0)
        total += float(vals.sum())
        total_sq += float((vals ** 2).sum())
        done += n

    mean = total / trials
    if trials > 1:
        var = max(total_sq / trials - mean ** 2, 0.0) * trials / (trials - 1)
        stderr = float(np.sqrt(var / trials))
    else:
        stderr = 0.0
    return CapacityEstimate(bits_per_s_hz=mean, stderr=stderr, trials=trials)


def effective_transmit_branches(spec: SchemeSpec) -> int:
    """Independent spatial inputs a scheme exposes to the channel.

    Antenna schemes contribute their antennas (the quadrature variant its
    antenna pairs), mirror schemes their activation patterns, the code-index
    scheme its code count, and plain OTFS a single input.  Used to compare
    scheme capacities on the equal-power MIMO formula.
    """
    if isinstance(spec, Otfs):
        return 1
    if isinstance(spec, (Ssk, Sm)):
        return spec.n_antennas
    if isinstance(spec, Qsm):
        return spec.n_antennas ** 2
    if isinstance(spec, Mbm):
        return 1 << spec.n_mirrors
    if isinstance(spec, Cim):
        return spec.n_codes
    raise TypeError(f"unknown scheme {spec!r}")


def scheme_ergodic_capacity(
    spec: SchemeSpec, n_rx: int, snr_linear: float, trials: int, rng
) -> CapacityEstimate:
    """Ergodic capacity of the scheme's effective MIMO configuration."""
    return ergodic_capacity(
        effective_transmit_branches(spec), n_rx, snr_linear, trials, rng
    )


@dataclass(frozen=True)
class MetricsReport:
    """Analytic metric bundle for one scheme configuration."""

    scheme: str
    se_bits_per_frame: int
    complexity_rms: int
    energy_saving_pct: float
    throughput_bps: float
    capacity_bits_per_s_hz: float


def compile_report(
    spec: SchemeSpec,
    baseline: Otfs,
    grid: DdGridConfig,
    n_rx: int,
    ber: float,
    snr_linear: float,
    capacity_trials: int,
    rng,
) -> MetricsReport:
    """Evaluate every closed-form metric for one scheme in one place."""
    se = bits_per_frame(spec, grid)
    saving = 0.0 if isinstance(spec, Otfs) else energy_saving_pct(spec, baseline, grid)
    cap = scheme_ergodic_capacity(spec, n_rx, snr_linear, capacity_trials, rng)
    return MetricsReport(
        scheme=scheme_label(spec),
        se_bits_per_frame=se,
        complexity_rms=ml_complexity_rms(spec, n_rx, grid),
        energy_saving_pct=saving,
        throughput_bps=throughput(ber, se, grid.frame_duration_s),
        capacity_bits_per_s_hz=cap.bits_per_s_hz,
    )
