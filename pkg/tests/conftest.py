import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dsflow.spaceform import de_sitter  # noqa: E402


@pytest.fixture(params=[2, 3, 5], ids=lambda n: f"n{n}")
def model(request):
    return de_sitter(request.param)


@pytest.fixture
def ds2():
    return de_sitter(2)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Print and collect one PASS/FAIL line, then assert it."""

    def emit(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert passed, line

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
