import numpy as np
import pytest

from gluenn.network import ArchSpec, TrunkSpec


def small_arch(labels, transform="identity", x_ref=1.0, head=(6, 5), width=4, hidden=(3,)):
    return ArchSpec(head, width, tuple(TrunkSpec(lab, hidden) for lab in labels), transform, x_ref)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one pass/fail line per acceptance criterion in the terminal summary ------------

_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number = report.nodeid.split("test_criterion_")[1].split("_")[0].rstrip("ab")
        outcome = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, report.outcome.upper())
        prev = _criteria.get(number)
        _criteria[number] = outcome if prev in (None, "PASS") else prev


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria, key=int):
        terminalreporter.write_line(f"criterion {number}: {_criteria[number]}")
