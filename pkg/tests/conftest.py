import numpy as np
import pytest

from bolab.spectral import SpectralField

ACCEPTANCE_LINES: dict[int, str] = {}


def random_field(rng, n_max, batch=(), decay=1.0):
    shape = tuple(batch) + (n_max,)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return SpectralField(z / np.arange(1, n_max + 1) ** decay)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
