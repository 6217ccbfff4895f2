import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    """Records the outcome of one acceptance criterion for the summary table."""

    def __init__(self, number: int):
        self.number = number
        self.detail = ""

    def check(self, ok: bool, detail: str) -> None:
        self.detail = detail
        _RESULTS[self.number] = (bool(ok), detail)
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'} ({detail})"
        print(line)
        assert ok, line


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number = marker.args[0]
    rec = Criterion(number)
    yield rec
    if number not in _RESULTS:
        _RESULTS[number] = (False, "did not reach its check")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
