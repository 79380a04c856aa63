"""Monte Carlo engine: calibration, determinism, counters, orderings."""

import numpy as np
import pytest

from ddmodlab.channel import ChannelConfig
from ddmodlab.grid import DdGridConfig
from ddmodlab.schemes import Cim, Mbm, Otfs, Qsm, Sm, Ssk, bits_per_frame
from ddmodlab.sim import BerCurve, SweepConfig, calibrate_noise, run_ber_sweep

GRID22 = DdGridConfig(2, 2)
CHAN = ChannelConfig(num_paths=2, doppler_mode="uniform_integer")


class TestCalibrateNoise:
    def test_zero_db_four_bits(self):
        assert calibrate_noise(Qsm(n_antennas=2, mod_order=4), GRID22, 0.0) == 0.25

    def test_vanishes_at_high_snr(self):
        assert calibrate_noise(Otfs(4), GRID22, 120.0) < 1e-12

    def test_doubling_bits_halves_variance(self):
        v4 = calibrate_noise(Otfs(16), GRID22, 7.0)   # 4 bits per grid
        v8 = calibrate_noise(Otfs(256), GRID22, 7.0)  # 8 bits per grid
        assert v8 == pytest.approx(v4 / 2)


class TestSweepConfig:
    def test_rejects_unsorted_points(self):
        with pytest.raises(ValueError):
            SweepConfig(snr_points_db=(0.0, 0.0))
        with pytest.raises(ValueError):
            SweepConfig(snr_points_db=(5.0, 0.0))

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            SweepConfig(snr_points_db=(0.0,), min_bit_errors=0)
        with pytest.raises(ValueError):
            SweepConfig(snr_points_db=(0.0,), max_frames=0)
        with pytest.raises(ValueError):
            SweepConfig(snr_points_db=(0.0,), detector="zero_forcing")


class TestDeterminism:
    SWEEP = SweepConfig(snr_points_db=(0.0, 10.0), max_frames=64,
                        min_bit_errors=10**9, seed=5)

    def test_same_seed_same_curve(self):
        a = run_ber_sweep(Sm(n_antennas=2, mod_order=2), CHAN, GRID22, 2, self.SWEEP)
        b = run_ber_sweep(Sm(n_antennas=2, mod_order=2), CHAN, GRID22, 2, self.SWEEP)
        assert a.points == b.points

    def test_worker_count_has_no_effect(self):
        spec = Qsm(n_antennas=2, mod_order=4)
        a = run_ber_sweep(spec, CHAN, GRID22, 2, self.SWEEP, n_workers=1)
        b = run_ber_sweep(spec, CHAN, GRID22, 2, self.SWEEP, n_workers=4)
        assert a.points == b.points

    def test_different_seed_differs(self):
        other = SweepConfig(snr_points_db=(0.0, 10.0), max_frames=64,
                            min_bit_errors=10**9, seed=6)
        a = run_ber_sweep(Otfs(4), CHAN, GRID22, 2, self.SWEEP)
        b = run_ber_sweep(Otfs(4), CHAN, GRID22, 2, other)
        assert a.points != b.points

    def test_cim_deterministic(self):
        spec = Cim(n_codes=2, code_length=4, mod_order=4)
        a = run_ber_sweep(spec, CHAN, GRID22, 2, self.SWEEP, n_workers=1)
        b = run_ber_sweep(spec, CHAN, GRID22, 2, self.SWEEP, n_workers=4)
        assert a.points == b.points


class TestCounters:
    def test_bits_sent_consistency(self):
        spec = Sm(n_antennas=2, mod_order=4)
        sweep = SweepConfig(snr_points_db=(0.0, 8.0), max_frames=300,
                            min_bit_errors=50, seed=7)
        curve = run_ber_sweep(spec, CHAN, GRID22, 2, sweep)
        n = bits_per_frame(spec, GRID22)
        for p in curve.points:
            assert p.bits_sent == p.frames * n
            assert p.ber == p.bit_errors / p.bits_sent
            assert p.bit_errors >= 50 or p.frames == 300

    def test_stops_on_error_target(self):
        sweep = SweepConfig(snr_points_db=(0.0,), max_frames=100_000,
                            min_bit_errors=10, seed=8, batch_frames=8)
        curve = run_ber_sweep(Otfs(4), CHAN, GRID22, 1, sweep)
        assert curve.points[0].bit_errors >= 10
        assert curve.points[0].frames < 100_000

    def test_config_echo_records_mode_and_calibration(self):
        sweep = SweepConfig(snr_points_db=(0.0,), max_frames=16,
                            min_bit_errors=10**9, seed=9)
        curve = run_ber_sweep(Otfs(4), CHAN, GRID22, 1, sweep)
        assert curve.config["channel"]["doppler_mode"] == "uniform_integer"
        assert "sigma^2" in curve.config["noise_calibration"]
        assert curve.config["sweep"]["seed"] == 9


class TestBehavior:
    def test_ber_monotone_in_snr(self):
        sweep = SweepConfig(snr_points_db=(0.0, 6.0, 12.0), max_frames=6000,
                            min_bit_errors=400, seed=10)
        curve = run_ber_sweep(Otfs(4), CHAN, GRID22, 2, sweep)
        bers = [p.ber for p in curve.points]
        ses = [np.sqrt(p.ber * (1 - p.ber) / p.bits_sent) for p in curve.points]
        for i in range(len(bers) - 1):
            assert bers[i + 1] <= bers[i] + ses[i] + ses[i + 1]

    def test_detector_tier_ordering(self):
        spec = Sm(n_antennas=2, mod_order=2)
        results = {}
        for det in ("per_grid_ml", "per_grid_ml_sic", "joint_ml"):
            sweep = SweepConfig(snr_points_db=(12.0,), max_frames=1500,
                                min_bit_errors=10**9, seed=11, detector=det,
                                sic_sweeps=2)
            results[det] = run_ber_sweep(spec, CHAN, GRID22, 2, sweep).points[0]
        se = {k: np.sqrt(p.ber * (1 - p.ber) / p.bits_sent) for k, p in results.items()}
        assert results["joint_ml"].ber <= results["per_grid_ml_sic"].ber + \
            se["joint_ml"] + se["per_grid_ml_sic"]
        assert results["per_grid_ml_sic"].ber <= results["per_grid_ml"].ber + \
            se["per_grid_ml_sic"] + se["per_grid_ml"]

    def test_high_snr_joint_ml_near_error_free(self):
        sweep = SweepConfig(snr_points_db=(40.0,), max_frames=1000,
                            min_bit_errors=10**9, seed=12, detector="joint_ml")
        curve = run_ber_sweep(Sm(n_antennas=2, mod_order=2), CHAN, GRID22, 2, sweep)
        assert curve.points[0].ber < 1e-3

    def test_mbm_runs_with_mirror_branches(self):
        sweep = SweepConfig(snr_points_db=(10.0,), max_frames=200,
                            min_bit_errors=10**9, seed=13)
        curve = run_ber_sweep(Mbm(n_mirrors=2, mod_order=2), CHAN, GRID22, 2, sweep)
        assert curve.points[0].bits_sent == 200 * 12

    def test_ssk_runs(self):
        sweep = SweepConfig(snr_points_db=(10.0,), max_frames=200,
                            min_bit_errors=10**9, seed=14)
        curve = run_ber_sweep(Ssk(n_antennas=4), CHAN, GRID22, 2, sweep)
        assert 0.0 <= curve.points[0].ber <= 1.0

    def test_curve_serializes(self):
        sweep = SweepConfig(snr_points_db=(0.0,), max_frames=8,
                            min_bit_errors=10**9, seed=15)
        curve = run_ber_sweep(Otfs(4), CHAN, GRID22, 1, sweep)
        d = curve.to_dict()
        assert d["points"][0]["bits_sent"] == 8 * 8
        assert isinstance(curve, BerCurve)
