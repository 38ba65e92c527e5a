import numpy as np
import pytest

from ratetip.models import AshwinParams, VdpParams


@pytest.fixture
def ashwin():
    return AshwinParams(epsilon=0.02, r=0.5, N=5)


@pytest.fixture
def vdp():
    return VdpParams(epsilon=0.02, r=0.1, alpha=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_REPORT_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``acceptance(number, title, ok, detail)``; the assertion is left to the test.
    """
    lines = request.config.stash.setdefault(_REPORT_KEY, [])

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})"
        lines.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda item: item[0]):
        terminalreporter.write_line(line)
