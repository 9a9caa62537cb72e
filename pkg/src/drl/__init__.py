"""Difference-polynomial systems over Frobenius fields: enumeration and regularity audits."""

__version__ = "0.1.0"

from .gf import FieldCtx, FieldElement, make_field
from .lang import DvsError, RefinementSpec, SystemSpec, parse_refinement, parse_system, print_system
from .lattice import apply_refinement
from .specializer import SpecializedSystem, at_q, enumerate_system

__all__ = [
    "FieldCtx", "FieldElement", "make_field", "DvsError", "RefinementSpec", "SystemSpec",
    "parse_refinement", "parse_system", "print_system", "apply_refinement",
    "SpecializedSystem", "at_q", "enumerate_system", "__version__",
]
