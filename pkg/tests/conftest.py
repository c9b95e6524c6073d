import numpy as np
import pytest

from oqbm.coefficients import direct_coefficients
from oqbm.presets import get_preset

ACCEPTANCE_LINES = []


def preset_coefficients(name):
    return direct_coefficients(get_preset(name)["coefficients"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
