import numpy as np
import pytest

CRITERIA = {}


def record_criterion(number: int, passed: bool, detail: str = ""):
    """Keep the worst outcome per acceptance criterion for the final summary."""
    prev = CRITERIA.get(number)
    if prev is None or (prev[0] and not passed):
        CRITERIA[number] = (passed, detail)
    elif prev[0] == passed:
        CRITERIA[number] = (passed, f"{prev[1]}; {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
