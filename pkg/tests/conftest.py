import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from multdioph.realnum import parse_real  # noqa: E402


@pytest.fixture(scope="session")
def s2s3():
    return parse_real("sqrt:2"), parse_real("sqrt:3")


@pytest.fixture(scope="session")
def golden_s2():
    return parse_real("quad:1,1,2,5"), parse_real("sqrt:2")


@pytest.fixture(scope="session")
def s2s5():
    return parse_real("sqrt:2"), parse_real("sqrt:5")


# one pass/fail line per acceptance criterion, printed after the run
_criteria: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _criteria[props["criterion"]] = (report.outcome.upper(), props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        outcome, detail = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {outcome:6s} {detail}")
