import subprocess

import pytest


def _run_scenario(name: str, out_dir) -> None:
    """Drive the simulation package strictly through its CLI."""
    proc = subprocess.run(
        ["lfmcal", "run", name, "--out-dir", str(out_dir)],
        capture_output=True, text=True, timeout=600,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"lfmcal run {name} failed: {proc.stderr}")


@pytest.fixture(scope="session")
def type1_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("type1")
    _run_scenario("type1-only", out)
    return out


@pytest.fixture(scope="session")
def fig8_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig8")
    _run_scenario("paper-fig8", out)
    return out


@pytest.fixture(scope="session")
def full_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    _run_scenario("full-array", out)
    return out


@pytest.fixture(scope="session")
def subband_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("subband")
    _run_scenario("subband-compare", out)
    return out
