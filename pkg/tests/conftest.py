import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

from drl.lang import parse_refinement, parse_system  # noqa: E402
from drl.lattice import apply_refinement  # noqa: E402

CORPUS = ROOT / "corpus"
ACCEPTANCE_LINES = []


def load(name):
    return parse_system((CORPUS / f"{name}.dvs").read_text())


def load_refined(name):
    spec = load(name)
    ref = parse_refinement((CORPUS / f"{name}_refine.dvs").read_text(), spec.p)
    return apply_refinement(spec, ref)


@pytest.fixture(scope="session")
def tower():
    return load("tower")


@pytest.fixture(scope="session")
def tower_refined():
    return load_refined("tower")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
