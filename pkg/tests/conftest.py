import sys
from pathlib import Path

import pytest

from softcondorcet import build_profile
from softcondorcet.experiments import warmup_profile, elo_tie_profile

DATA = Path(__file__).parent / "data"


@pytest.fixture
def tie():
    return elo_tie_profile()


@pytest.fixture
def warm():
    return warmup_profile()


@pytest.fixture
def cyclic():
    return build_profile([("ABC", 1), ("BCA", 1), ("CAB", 1)], alternatives="ABC")


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(mod.RESULTS.items()):
        terminalreporter.write_line(line)
