
import numpy as np
import pytest

from wpcdelay import _backend
from wpcdelay.channel import FadingModel
from wpcdelay.single_user import SystemParams

ACCEPTANCE_LINES = []


@pytest.fixture(params=_backend.available_backends())
def backend(request):
    previous = _backend.use_backend(request.param)
    yield request.param
    _backend.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fig4a():
    """B = 100 kHz, R0 = 50 kbit, a0 = 5 dB, m = 4."""
    return SystemParams.from_db(5.0, 100e3, 50e3, 4.0)


@pytest.fixture
def m4():
    return FadingModel(4.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
