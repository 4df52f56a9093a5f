import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from arcticspill.io import load_bundled  # noqa: E402


@pytest.fixture(scope="session")
def bundled():
    return load_bundled()


ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Record a one-line outcome for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
