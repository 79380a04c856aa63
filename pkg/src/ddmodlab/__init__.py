"""Delay-Doppler modulation link-level simulation toolkit.

Implements plain OTFS plus five index-modulation variants (antenna-index,
antenna+symbol, quadrature antenna, mirror-pattern and code-index schemes)
over doubly-dispersive Rayleigh channels, with an ML detector family, a
deterministic Monte Carlo BER engine, and closed-form calculators for
detector complexity, spectral efficiency, energy saving, ergodic capacity
and throughput.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelConfig,
    EffectiveChannel,
    PathSet,
    cim_grid_channels,
    effective_dd_channel,
    sample_paths,
)
from .detect import (
    DetectedFrame,
    detect_cim,
    detect_joint_ml,
    detect_per_grid_ml,
    detect_sic_refine,
)
from .grid import Constellation, DdGridConfig, Rng, build_constellation
from .metrics import (
    CapacityEstimate,
    MetricsReport,
    energy_saving_pct,
    ergodic_capacity,
    ml_complexity_rms,
    throughput,
)
from .schemes import (
    Cim,
    Mbm,
    Otfs,
    Qsm,
    Sm,
    Ssk,
    TxFrame,
    WalshCodeBook,
    bits_per_frame,
    demap_frame,
    map_frame,
    scheme_label,
    walsh_codes,
)
from .sim import BerCurve, BerPoint, SweepConfig, calibrate_noise, run_ber_sweep
from .transform import dd_to_time, time_to_dd

__all__ = [
    "__version__",
    "BerCurve",
    "BerPoint",
    "CapacityEstimate",
    "ChannelConfig",
    "Cim",
    "Constellation",
    "DdGridConfig",
    "DetectedFrame",
    "EffectiveChannel",
    "Mbm",
    "MetricsReport",
    "Otfs",
    "PathSet",
    "Qsm",
    "Rng",
    "Sm",
    "Ssk",
    "SweepConfig",
    "TxFrame",
    "WalshCodeBook",
    "bits_per_frame",
    "build_constellation",
    "calibrate_noise",
    "cim_grid_channels",
    "demap_frame",
    "detect_cim",
    "detect_joint_ml",
    "detect_per_grid_ml",
    "detect_sic_refine",
    "dd_to_time",
    "effective_dd_channel",
    "energy_saving_pct",
    "ergodic_capacity",
    "map_frame",
    "ml_complexity_rms",
    "run_ber_sweep",
    "sample_paths",
    "scheme_label",
    "throughput",
    "time_to_dd",
    "walsh_codes",
]
