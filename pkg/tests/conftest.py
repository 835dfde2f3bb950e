import numpy as np
import pytest

from rwave.core_grid import make_grid

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def g2():
    return make_grid(2, 16, 2)


@pytest.fixture(scope="session")
def g4():
    return make_grid(4, 16, 2)


@pytest.fixture(scope="session")
def g4_small():
    return make_grid(4, 8, 2)
