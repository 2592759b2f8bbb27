import numpy as np
import pytest

from spcorr.corrkernel import EigenSystem

_CRITERIA = {}


def record_criterion(number, ok, detail):
    """Remember one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    _CRITERIA[number] = line
    print(line)
    return ok


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture(scope="session")
def classical():
    return EigenSystem.classical(1.0)


@pytest.fixture(scope="session")
def smallpert2():
    return EigenSystem.smallpert(2.0)


@pytest.fixture(scope="session")
def gausslag():
    return EigenSystem.gausslag(0.6, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
