import json
import math
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mirrorp2.qseries import ModularParams
from mirrorp2.spectral import SpectralConfig, find_levels

settings.register_profile("repo", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"
_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """criterion(n, ok, detail): print and record one PASS/FAIL line, then assert."""

    def report(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _LINES.append(line)
        assert ok, line

    return report


@pytest.fixture(scope="session")
def P():
    return ModularParams.from_theta(math.pi / 4)


@pytest.fixture(scope="session")
def golden():
    return json.loads((DATA / "golden_levels.json").read_text())


@pytest.fixture(scope="session")
def levels():
    return find_levels(SpectralConfig())
