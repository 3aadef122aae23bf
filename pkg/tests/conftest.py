import numpy as np
import pytest

from qgft import SUq2Backend, cyclic, symmetric3
from qgft.fourier import dual_weight

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def suq2():
    return SUq2Backend(q=0.5, N=64, L=3)


@pytest.fixture(scope="session")
def small_suq2():
    """Cheap model for tests that build dense operators on the GNS space."""
    return SUq2Backend(q=0.5, N=24, L=1.5)


@pytest.fixture(scope="session")
def s3():
    return symmetric3()


@pytest.fixture(scope="session")
def c8():
    return cyclic(8)


@pytest.fixture(scope="session", params=["suq2", "s3", "c8"])
def any_backend(request):
    return request.getfixturevalue(request.param)


@pytest.fixture(scope="session")
def weight_of():
    return dual_weight


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
