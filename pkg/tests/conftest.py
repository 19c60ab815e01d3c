import sys
from pathlib import Path

import numpy as np
import pytest

from shipprior import available_backends

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

FIXTURES = TESTS / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=available_backends())
def backend(request):
    return request.param


# --- acceptance summary ----------------------------------------------------------
# tests in test_acceptance.py carry @pytest.mark.criterion(number, title); one
# PASS/FAIL line per criterion is printed at the end of the run.

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _criteria.setdefault(number, {"title": title, "ok": True, "seen": False})


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    entry = _criteria[mark.args[0]]
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        entry["seen"] = True
        if call.excinfo is not None:
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    ran = {n: e for n, e in _criteria.items() if e["seen"]}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ran):
        e = ran[number]
        terminalreporter.write_line(f"[{'PASS' if e['ok'] else 'FAIL'}] {number:2d}. {e['title']}")
