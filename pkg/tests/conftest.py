import math

import pytest

from jumphedge.model import ClaimSpec, JumpMeasure, MarketParams, Put

FIG1_MU = 0.1125
LOG_075 = math.log(0.75)


@pytest.fixture
def fig1_market():
    """sigma 0.2, r 0, one -25% jump at rate 0.25, average drift 5%."""
    return MarketParams.from_average_drift(0.05, 0.2, 0.0, JumpMeasure.single(-0.25, 0.25))


@pytest.fixture
def fig2_market():
    return MarketParams.from_average_drift(-0.05, 0.2, 0.0, JumpMeasure.single(-0.25, 0.25))


@pytest.fixture
def put100():
    return ClaimSpec(Put(100.0), 1.0)


_ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    _ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
