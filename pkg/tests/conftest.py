import pytest

_GATE: dict[int, tuple[bool, str, str]] = {}


class Gate:
    """Records one PASS/FAIL line per acceptance criterion."""

    def record(self, number: int, title: str, passed: bool, detail: str) -> bool:
        _GATE[number] = (bool(passed), title, detail)
        print(self.line(number))
        return bool(passed)

    @staticmethod
    def line(number: int) -> str:
        passed, title, detail = _GATE[number]
        return f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}"


@pytest.fixture(scope="session")
def gate():
    return Gate()


def pytest_terminal_summary(terminalreporter):
    if not _GATE:
        return
    terminalreporter.section("acceptance gate")
    for n in sorted(_GATE):
        terminalreporter.write_line(Gate.line(n))
