import numpy as np
import pytest

from lfmcal.beamforming import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    Beampattern,
    beampattern,
    pattern_metrics,
    steering_weights,
)
from lfmcal.exceptions import ConfigError, MetricError, ParameterError

F0 = 3.25e9


class TestArrayConfig:
    def test_defaults_valid(self):
        cfg = ArrayConfig()
        assert cfg.n_trm == 64 and cfg.n_ttd == 8

    @pytest.mark.parametrize("kw", [
        dict(n_trm=10, n_ttd=3),
        dict(steer_angle=90.0),
        dict(spacing=-0.01),
        dict(phase_shifter_bits=0),
    ])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ParameterError):
            ArrayConfig(**kw)


class TestSteeringWeights:
    def test_broadside_is_all_zero(self):
        w = steering_weights(ArrayConfig(steer_angle=0.0), F0)
        assert np.all(w.ttd_delay == 0.0)
        assert np.all(w.phase == 0.0)

    def test_adjacent_element_delay_matches_geometry(self):
        # oracle: d * sin(theta) / c with half-wavelength spacing
        cfg = ArrayConfig(steer_angle=-35.0, ttd_quantum=None,
                          phase_shifter_bits=None, n_ttd=64)
        w = steering_weights(cfg, F0)
        spacing = SPEED_OF_LIGHT / F0 / 2
        expected = spacing * np.sin(np.deg2rad(-35.0)) / SPEED_OF_LIGHT
        deltas = np.diff(w.element_delay)
        assert np.allclose(deltas, expected, rtol=1e-12)
        assert abs(abs(expected) - 88.3e-12) < 0.2e-12

    def test_unquantized_hybrid_points_at_steer_everywhere(self):
        cfg = ArrayConfig(steer_angle=-35.0, ttd_quantum=None, phase_shifter_bits=None,
                          n_trm=64, n_ttd=64)
        w = steering_weights(cfg, F0)
        freqs = F0 + np.linspace(-250e6, 250e6, 5)
        angles = np.arange(-60.0, -10.0, 0.05)
        pat = beampattern(cfg, w, None, freqs, angles)
        for row in pat.gain_db:
            assert angles[np.argmax(row)] == pytest.approx(-35.0, abs=0.051)


class TestBeampattern:
    def test_ideal_peak_is_zero_db_every_frequency(self):
        cfg = ArrayConfig()
        w = steering_weights(cfg, F0)
        freqs = F0 + np.linspace(-250e6, 250e6, 7)
        angles = np.arange(-90.0, 90.01, 0.05)
        pat = beampattern(cfg, w, None, freqs, angles)
        assert np.allclose(pat.gain_db.max(axis=1), 0.0, atol=1e-12)

    def test_two_element_closed_form(self):
        # oracle: |1 + e^{j dphi}|^2 / 4 for a two-element broadside array
        cfg = ArrayConfig(n_trm=2, n_ttd=1, steer_angle=0.0,
                          ttd_quantum=None, phase_shifter_bits=None)
        w = steering_weights(cfg, F0)
        psi = np.deg2rad(40.0)
        freqs = np.array([F0])
        angles = np.arange(-90.0, 90.01, 0.05)
        response = np.array([[1.0], [np.exp(1j * psi)]])
        pat = beampattern(cfg, w, response, freqs, angles)

        spacing = SPEED_OF_LIGHT / F0 / 2
        pos = (np.arange(2) - 0.5) * spacing
        k = 2 * np.pi * F0 / SPEED_OF_LIGHT
        dphi = psi - k * (pos[1] - pos[0]) * np.sin(np.deg2rad(angles))
        closed = np.abs(1 + np.exp(1j * dphi)) ** 2 / 4.0
        # same normalization: per-frequency ideal peak and mean |E| (=1 here)
        ideal_peak = np.max(np.abs(1 + np.exp(-1j * k * (pos[1] - pos[0])
                                              * np.sin(np.deg2rad(angles)))) ** 2) / 4.0
        expected_db = 10 * np.log10(closed / ideal_peak)
        assert np.max(np.abs(pat.gain_db[0] - expected_db)) < 1e-9

    def test_common_scalar_invariance(self):
        cfg = ArrayConfig(n_trm=16, n_ttd=4, steer_angle=-35.0)
        w = steering_weights(cfg, F0)
        freqs = F0 + np.linspace(-250e6, 250e6, 3)
        angles = np.arange(-90.0, 90.01, 0.1)
        rng = np.random.default_rng(0)
        response = np.exp(1j * rng.uniform(-0.2, 0.2, (16, 3))) \
            * 10 ** (rng.uniform(-1.1, 0, (16, 3)) / 20)
        c = 0.31 * np.exp(1j * 1.1)
        a = beampattern(cfg, w, response, freqs, angles)
        b = beampattern(cfg, w, c * response, freqs, angles)
        assert np.max(np.abs(a.gain_db - b.gain_db)) < 1e-9

    def test_squint_divergence_monotone_off_carrier(self):
        # hybrid grouped-TTD weights vs per-element TTD: identical at the
        # carrier, diverging monotonically toward the band edges
        hybrid_cfg = ArrayConfig(steer_angle=-35.0, ttd_quantum=None,
                                 phase_shifter_bits=None)
        pure_cfg = ArrayConfig(steer_angle=-35.0, n_ttd=64, ttd_quantum=None,
                               phase_shifter_bits=None)
        wh = steering_weights(hybrid_cfg, F0)
        wp = steering_weights(pure_cfg, F0)
        offsets = np.array([0.0, 62.5e6, 125e6, 187.5e6, 250e6])
        angles = np.arange(-45.0, -25.0, 0.05)
        for sign in (+1, -1):
            freqs = F0 + sign * offsets
            gh = beampattern(hybrid_cfg, wh, None, freqs, angles).gain_db
            gp = beampattern(pure_cfg, wp, None, freqs, angles).gain_db
            divergence = np.sqrt(np.mean((gh - gp) ** 2, axis=1))
            assert divergence[0] < 1e-9
            assert np.all(np.diff(divergence) > 0)

    def test_empty_axes_rejected(self):
        cfg = ArrayConfig()
        w = steering_weights(cfg, F0)
        with pytest.raises(ConfigError):
            beampattern(cfg, w, None, np.array([]), np.array([0.0]))
        with pytest.raises(ConfigError):
            beampattern(cfg, w, None, np.array([F0]), np.array([]))


class TestPatternMetrics:
    def _ideal_pattern(self, steer=-35.0):
        cfg = ArrayConfig(steer_angle=steer)
        w = steering_weights(cfg, F0)
        freqs = F0 + np.linspace(-250e6, 250e6, 5)
        angles = np.arange(-90.0, 90.01, 0.05)
        return beampattern(cfg, w, None, freqs, angles)

    def test_ideal_metrics(self):
        pat = self._ideal_pattern()
        met = pattern_metrics(pat, -35.0)
        assert np.max(np.abs(met.pointing_error_deg)) <= 0.05 + 1e-9
        assert np.max(np.abs(met.peak_loss_db)) < 0.01
        assert np.all(met.peak_sidelobe_db < -10.0)

    def test_coarse_grid_rejected(self):
        pat = self._ideal_pattern()
        coarse = Beampattern(pat.freqs, pat.angles[::40], pat.gain_db[:, ::40])
        with pytest.raises(MetricError):
            pattern_metrics(coarse, -35.0)

    def test_truncated_main_lobe_rejected(self):
        cfg = ArrayConfig(steer_angle=-35.0)
        w = steering_weights(cfg, F0)
        freqs = np.array([F0])
        angles = np.arange(-36.0, -34.0, 0.05)  # grid ends inside the lobe
        pat = beampattern(cfg, w, None, freqs, angles)
        with pytest.raises(MetricError):
            pattern_metrics(pat, -35.0)
