import re

import pytest

# outcome per acceptance criterion, keyed by its number
_CRITERIA: dict[int, tuple[str, bool]] = {}
_NAME = re.compile(r"test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = _NAME.search(report.nodeid)
    if not m:
        return
    num, name = int(m.group(1)), m.group(2).replace("_", " ")
    ok = report.passed or (report.when != "call" and not report.failed)
    prev = _CRITERIA.get(num, (name, True))
    if report.when == "call" or report.failed:
        _CRITERIA[num] = (name, prev[1] and ok and not report.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        name, ok = _CRITERIA[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}: {name}")


@pytest.fixture(scope="session")
def rng():
    import numpy as np

    return np.random.default_rng(20240601)
