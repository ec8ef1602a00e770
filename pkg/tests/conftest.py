import pytest

CRITERIA = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line: (label, passed, detail)."""

    def record(label, passed, detail):
        CRITERIA.append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
