import re

import pytest

from laneemden.exponents import ProblemParams

_CRITERION = re.compile(r"test_c(\d\d)_(\w+)")
_outcomes: dict[int, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def params10():
    return ProblemParams(10, 1.3)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    num = int(m.group(1))
    name = m.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        prev = _outcomes.get(num)
        status = "PASS" if report.outcome == "passed" else "FAIL"
        if prev is None or prev[0] == "PASS":
            _outcomes[num] = (status, name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        status, name = _outcomes[num]
        terminalreporter.write_line(f"criterion {num:02d}: {status}  ({name})")
