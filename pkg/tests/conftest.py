import pytest
from hypothesis import settings

from qvn.core import MachineParams, quantum4004_preset, small_layout

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def preset():
    return quantum4004_preset()


@pytest.fixture(scope="session")
def params():
    return MachineParams()


@pytest.fixture(scope="session")
def small():
    return small_layout(grid=(8, 8))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
