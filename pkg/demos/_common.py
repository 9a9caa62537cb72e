from pathlib import Path

from drl import parse_refinement, parse_system

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse_system((CORPUS / f"{name}.dvs").read_text())


def load_refinement(name, p):
    return parse_refinement((CORPUS / f"{name}_refine.dvs").read_text(), p)
