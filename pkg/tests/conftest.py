import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qutritfridge.dynamics import make_reservoirs  # noqa: E402

REFERENCE_N = {"cold": 10.0, "hot": 1.0, "work": 100.0}


@pytest.fixture
def reference_reservoirs():
    """Gamma = 0.1 on every bath, Delta = 10, n = (10, 1, 100)."""
    return make_reservoirs(10.0, 0.1, n=REFERENCE_N)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("QUTRITFRIDGE_CACHE", str(tmp_path / "cache"))


# acceptance verdicts, echoed once at the end of the run
ACCEPTANCE = []


@pytest.fixture
def verdict():
    def record(number, title, passed, detail=""):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
