import pytest

# criterion number -> (passed, summary line); filled by test_acceptance.py
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, line = CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {line}")


@pytest.fixture(scope="session")
def criteria():
    return CRITERIA
