import contextlib

import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion.

    Usage: ``with criterion(3, "graph golden set") as note: ...; note("detail")``.
    """

    @contextlib.contextmanager
    def record(number, title):
        details = []
        try:
            yield details.append
        except BaseException:
            _CRITERIA[number] = f"FAIL criterion {number:>2}: {title} {'; '.join(details)}".rstrip()
            raise
        _CRITERIA[number] = f"PASS criterion {number:>2}: {title} {'; '.join(details)}".rstrip()

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])
