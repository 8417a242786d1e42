import pytest

from nlspike.analysis import SweepRunner
from nlspike.config import KernelDefaults, RunSettings
from nlspike.operators import NlsConfig


@pytest.fixture(scope="session")
def defaults() -> KernelDefaults:
    return KernelDefaults.from_json()


@pytest.fixture(scope="session")
def cfg(defaults) -> NlsConfig:
    """H=5, K=64, (T, L)=(16, 256), n_cordic=8."""
    return NlsConfig.from_defaults(defaults)


@pytest.fixture
def runner(defaults) -> SweepRunner:
    return SweepRunner(RunSettings(threads=2, seed=7), defaults)
