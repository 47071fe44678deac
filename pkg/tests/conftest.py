import numpy as np
import pytest

from geofol.metrics import LightlikeModel, TypeChangeModel, sin_variant
from geofol.thurston import ThurstonModel


@pytest.fixture(scope="session")
def thurston():
    return ThurstonModel("xi")


@pytest.fixture(scope="session")
def lightlike():
    return LightlikeModel()


@pytest.fixture(scope="session")
def typechange():
    return TypeChangeModel()


@pytest.fixture(scope="session")
def sin_model():
    return sin_variant()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
