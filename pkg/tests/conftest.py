import pytest

from sheetspy.resources import load_sample, sample_path
from sheetspy.workbook import load_sheet


@pytest.fixture
def sample():
    return load_sample


@pytest.fixture
def sample_file():
    return lambda name: str(sample_path(name))


@pytest.fixture
def sheet_from():
    """Build a sheet from FML-CSV text."""
    return lambda text, name="Sheet1": load_sheet(text, name)


# -- acceptance summary ---------------------------------------------------------------
#
# Tests marked ``criterion(n, title)`` are rolled up into one PASS/FAIL line per
# criterion at the end of the run.

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": 0})
    entry["failed" if rep.failed else "passed"] += rep.when == "call" or rep.failed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "FAIL" if e["failed"] else "PASS"
        terminalreporter.write_line(f"[{status}] {number}. {e['title']} ({e['passed']} passed, {e['failed']} failed)")
