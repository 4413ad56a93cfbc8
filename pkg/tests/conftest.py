import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record (number, passed, detail) for the acceptance summary."""
    def record(n, passed, detail):
        _CRITERIA[n] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
