import pytest

_LINES = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion as one summary line.

    Usage: ``criterion(3, ok, "detail")``; the test should assert ``ok``
    afterwards so a failed criterion also fails the test.
    """
    def record(number: int, ok: bool, detail: str) -> None:
        _LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_LINES[number])
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
