import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from sdmce.fixtures import fan_disk, hemisphere  # noqa: E402
from sdmce.pipeline import Parameterizer  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fan12():
    return fan_disk(12)


@pytest.fixture(scope="session")
def hemi12():
    return hemisphere(12)


@pytest.fixture(scope="session")
def hemi12_solver(hemi12):
    return Parameterizer(hemi12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
