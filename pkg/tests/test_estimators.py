import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lfmcal.errormodel import make_error_model, inject_errors
from lfmcal.estimators import (
    ConventionalCalibrator,
    SlidingWindowCalibrator,
    SubbandCalibrator,
)
from lfmcal.exceptions import ParameterError

GRIDS = dict(coarse_grid=2e-9, fine_grid=20e-12)


@pytest.fixture(scope="module")
def errored(params_small, chirp_small):
    m = make_error_model("freq_dependent", bw=params_small.bw, seed=13,
                         amp_range=(-1.1, 0.0),
                         phase_range=np.deg2rad((-7.0, 7.0)), **GRIDS)
    return inject_errors(chirp_small, m, params_small), m


class TestConventionalCalibrator:
    def test_fit_transform(self, params_small, chirp_small):
        m = make_error_model("constant", bw=params_small.bw, amp_db=-3.0,
                             phase_rad=np.deg2rad(5.0), **GRIDS)
        rec = inject_errors(chirp_small, m, params_small)
        est = ConventionalCalibrator(params_small).fit(rec, chirp_small)
        assert est.amp_db_ == pytest.approx(-3.0, abs=0.01)
        out = est.transform(rec)
        assert np.max(np.abs(out.samples - chirp_small.samples)) < 1e-6

    def test_not_fitted(self, chirp_small):
        with pytest.raises(NotFittedError):
            ConventionalCalibrator().transform(chirp_small)

    def test_rejects_non_trace(self, chirp_small):
        with pytest.raises(ParameterError):
            ConventionalCalibrator().fit(np.ones(8), chirp_small)


class TestSlidingWindowCalibrator:
    def test_fit_learns_rows_and_delay(self, params_small, chirp_small, errored):
        rec, m = errored
        est = SlidingWindowCalibrator(params_small, window_len=250,
                                      overlap_ratio=0.85).fit(rec, chirp_small)
        assert est.freq_bins_.size > 50
        # window spans 5% of the short test pulse, so allow its averaging bias
        assert np.max(np.abs(est.amp_db_ - m.amp(est.freq_bins_))) < 0.05
        out = est.transform(rec)
        ratio = out.samples * np.conj(chirp_small.samples)
        assert np.sqrt(np.mean((20 * np.log10(np.abs(ratio))) ** 2)) < 0.05

    def test_predistort_round_trip(self, params_small, chirp_small, errored):
        rec, m = errored
        est = SlidingWindowCalibrator(params_small, window_len=250,
                                      overlap_ratio=0.85).fit(rec, chirp_small)
        through = inject_errors(est.predistort(chirp_small), m, params_small)
        ratio = through.samples * np.conj(chirp_small.samples)
        assert np.rad2deg(np.sqrt(np.mean(np.angle(ratio) ** 2))) < 5.0

    def test_get_set_params_and_clone(self, params_small):
        est = SlidingWindowCalibrator(params_small, window_len=500, overlap_ratio=0.85)
        got = est.get_params()
        assert got["window_len"] == 500 and got["overlap_ratio"] == 0.85
        est.set_params(window_len=4000, overlap_ratio=0.30)
        assert est.window_len == 4000
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_params_required(self, chirp_small):
        with pytest.raises(ParameterError):
            SlidingWindowCalibrator().fit(chirp_small, chirp_small)


class TestSubbandCalibrator:
    def test_fit_matches_subband_rows(self, params_small, chirp_small, errored):
        rec, m = errored
        est = SubbandCalibrator(params_small, n_bands=20).fit(rec, chirp_small)
        assert est.freq_bins_.size == 20

    def test_not_fitted(self, chirp_small):
        with pytest.raises(NotFittedError):
            SubbandCalibrator().transform(chirp_small)
