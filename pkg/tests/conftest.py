import numpy as np
import pytest

_REPORT = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_configure(config):
    config.stash[_REPORT] = []


@pytest.fixture
def report(request):
    """``report(number, passed, detail)`` prints and stores one acceptance line."""
    def _report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        print(line)
        request.config.stash[_REPORT].append(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
