import numpy as np
import pytest

from conformal_ordinal import THREE_BAND, RecordSet


@pytest.fixture
def three_band():
    return THREE_BAND


@pytest.fixture
def small_set(three_band):
    probs = np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.2, 0.2, 0.6]])
    return RecordSet(three_band, ["a", "b", "c"], probs, [0, 1, 2])


_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: package exit criteria")


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.outcome != "passed" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    from test_acceptance import __dict__ as module

    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        doc = (module[name].__doc__ or "").strip()
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name.replace('test_', '')}: {doc}")
