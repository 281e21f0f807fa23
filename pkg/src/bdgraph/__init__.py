"""Exact finite-level computations for limit algebras built from directed graphs."""

from .classify import SupernaturalNumber, bd_invariant, bd_isomorphic, bd_simple, supernatural_of
from .derived import build_bouquet, build_cycle, build_E_bracket_n, build_E_eq_n, build_E_n, loop_decompose
from .errors import (
    AdmissibilityError,
    BDGraphError,
    ConsistencyError,
    DomainError,
    GraphStructureError,
    GuardError,
    InputError,
    LevelError,
    PreconditionError,
)
from .graph import DirectedMultigraph, DivisibilitySequence, Path, block_decompose, remainder
from .odometer import sigma, sufficient_simplicity, tau

__all__ = [
    "AdmissibilityError",
    "BDGraphError",
    "ConsistencyError",
    "DirectedMultigraph",
    "DivisibilitySequence",
    "DomainError",
    "GraphStructureError",
    "GuardError",
    "InputError",
    "LevelError",
    "Path",
    "PreconditionError",
    "SupernaturalNumber",
    "bd_invariant",
    "bd_isomorphic",
    "bd_simple",
    "block_decompose",
    "build_E_bracket_n",
    "build_E_eq_n",
    "build_E_n",
    "build_bouquet",
    "build_cycle",
    "loop_decompose",
    "remainder",
    "sigma",
    "sufficient_simplicity",
    "supernatural_of",
    "tau",
]
