import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chemgraph import io  # noqa: E402

FIXTURES = Path(io.__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def load_fixture():
    def load(name, **opts):
        return io.load_graph(FIXTURES / f"{name}.json", **opts)
    return load


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
