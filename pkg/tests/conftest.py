import numpy as np
import pytest

from lfmcal.waveform import LfmParams, generate_lfm


@pytest.fixture(scope="session")
def params_small():
    """Short pulse for fast unit tests (5000 samples, decimation 5)."""
    return LfmParams(f0=1.0e9, bw=0.5e9, pulse_width=2e-6,
                     proc_rate=2.5e9, base_rate=0.5e9)


@pytest.fixture(scope="session")
def params_table1():
    """Reference system scale: 3.25 GHz / 0.5 GHz / 8 us at 10 GHz processing."""
    return LfmParams(f0=3.25e9, bw=0.5e9, pulse_width=8e-6,
                     proc_rate=10e9, base_rate=2e9)


@pytest.fixture(scope="session")
def chirp_small(params_small):
    return generate_lfm(params_small)


@pytest.fixture(scope="session")
def chirp_table1(params_table1):
    return generate_lfm(params_table1)


def rmse(a, b=0.0):
    return float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))
