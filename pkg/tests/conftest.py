import logging

import pytest

from surprisal.study import StudySummary, recover_normal_approx

BROWN = StudySummary("brown_hdps", 1.61, 0.997, 2.59, 0.95, "ratio")

_acceptance: list[tuple[str, str]] = []


@pytest.fixture
def brown_summary():
    return BROWN


@pytest.fixture
def brown():
    logging.disable(logging.WARNING)
    try:
        yield recover_normal_approx(BROWN)
    finally:
        logging.disable(logging.NOTSET)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") and report.when == "call":
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance.append(("PASS" if report.passed else "FAIL", doc))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for status, doc in _acceptance:
        terminalreporter.write_line(f"[{status}] {doc}")
