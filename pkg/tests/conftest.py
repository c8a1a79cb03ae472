import numpy as np
import pytest

from treegibbs.kernel import ModelParams
from treegibbs.reduction import analytic_fixed_points


@pytest.fixture(scope="session")
def k2_strong():
    return ModelParams(2, 0.9)


@pytest.fixture(scope="session")
def k2_branches(k2_strong):
    """phi_1 = 1, phi_2 (y > 0), phi_3 (y < 0) at k = 2, theta = 0.9."""
    return analytic_fixed_points(k2_strong).positive_branches()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_acceptance_lines: dict[tuple, str] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str, part: str = ""):
        line = f"criterion {number:2d}{part}: {'PASS' if ok else 'FAIL'}  {detail}"
        _acceptance_lines[(number, part)] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_acceptance_lines):
            terminalreporter.write_line(_acceptance_lines[key])
