"""Cell complexes with measured incidence: chains, Euler operators, splitting, Laplacians."""

from .complex import (
    CellComplex,
    Chain,
    Cochain,
    ValidationReport,
    boundary,
    chain_map_check,
    coboundary,
    pairing,
    point_complex,
    validate,
)
from .euler_ops import SplitDescriptor, derive_descriptor, hasse_make, make, make_recorded
from .hasse import HasseMatrix, assemble_hasse, dual_hasse, euler_characteristic
from .io import emit_complex, parse_complex
from .laplace import (
    GramStructure,
    adjacency_minus,
    adjacency_plus,
    adjoint_boundary,
    laplace_derham,
    pairing_gram,
)
from .sparse import SparseMatrix
from .split import Hyperplane, iterated_split, split_complex

__all__ = [
    "CellComplex",
    "Chain",
    "Cochain",
    "GramStructure",
    "HasseMatrix",
    "Hyperplane",
    "SparseMatrix",
    "SplitDescriptor",
    "ValidationReport",
    "adjacency_minus",
    "adjacency_plus",
    "adjoint_boundary",
    "assemble_hasse",
    "boundary",
    "chain_map_check",
    "coboundary",
    "derive_descriptor",
    "dual_hasse",
    "emit_complex",
    "euler_characteristic",
    "hasse_make",
    "iterated_split",
    "laplace_derham",
    "load_fixture",
    "make",
    "make_recorded",
    "pairing",
    "pairing_gram",
    "parse_complex",
    "point_complex",
    "split_complex",
    "validate",
]


def fixture_path(name: str):
    """Path of a shipped data file, e.g. ``"triangle.cx"``."""
    from importlib.resources import files

    return files(__name__) / "data" / name


def load_fixture(name: str) -> CellComplex:
    """Parse a shipped complex document by file name."""
    return parse_complex(fixture_path(name).read_text(encoding="utf-8"))
