import numpy as np
import pytest

from twr_qos.channel_model import make_fading_spec, sample_csi
from twr_qos.config import ScenarioConfig


@pytest.fixture(scope="session")
def small_config():
    return ScenarioConfig(samples=2000, seed=3)


@pytest.fixture(scope="session")
def small_samples(small_config):
    return sample_csi(small_config.fading, small_config.samples, small_config.seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def paper_spec():
    return make_fading_spec(1.0, 4.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
