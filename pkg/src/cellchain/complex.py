"""Cell complexes as chain complexes with measured incidence.

A complex stores, per dimension, the number of cells, a positive size for each
cell, and the signed (+1/-1) incidence between consecutive skeletons. Cells
are addressed externally as ``(dimension, ordinal)`` with 1-based ordinals;
internally every index is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sparse import (
    ShapeError,
    SparseMatrix,
    elementwise_abs,
    mat_vec,
    max_abs_diff,
    multiply,
    transpose,
)

#: tolerance for chain-complex residuals (relative to term magnitude, see validate)
RESIDUAL_TOL = 1e-10


class CellComplex:
    """A d-dimensional cell complex.

    Args:
        counts: number of cells per dimension, ``(k_0, ..., k_d)``.
        incidence: ``incidence[p]`` is the k_p x k_{p+1} signed incidence
            matrix B_p, for p = 0..d-1.
        sizes: per-dimension positive cell sizes; ``sizes[0]`` may be omitted
            (0-cells always have unit size). ``None`` means unit sizes.
        coords: optional k_0 x n array of vertex positions.

    Only structural consistency (shapes, lengths) is enforced here; the
    algebraic invariants are checked by :func:`validate`.
    """

    def __init__(
        self,
        counts: Sequence[int],
        incidence: Sequence[SparseMatrix],
        sizes: Sequence[Sequence[float]] | None = None,
        coords=None,
    ):
        counts = tuple(int(k) for k in counts)
        if not counts:
            raise ValueError("a complex needs at least the 0-skeleton")
        if any(k < 0 for k in counts):
            raise ValueError(f"negative cell count in {counts}")
        d = len(counts) - 1
        if len(incidence) != d:
            raise ValueError(f"expected {d} incidence matrices, got {len(incidence)}")
        for p, b in enumerate(incidence):
            if b.shape != (counts[p], counts[p + 1]):
                raise ShapeError(
                    f"B_{p} has shape {b.shape}, expected {(counts[p], counts[p + 1])}"
                )
        if sizes is None:
            sizes = [np.ones(k) for k in counts]
        else:
            sizes = list(sizes)
            if len(sizes) == d:
                sizes = [np.ones(counts[0])] + sizes
            if len(sizes) != d + 1:
                raise ValueError(f"expected {d + 1} size vectors, got {len(sizes)}")
        frozen = []
        for p, s in enumerate(sizes):
            a = np.array(s, dtype=np.float64).ravel()
            if len(a) != counts[p]:
                raise ShapeError(f"{len(a)} sizes given for {counts[p]} {p}-cells")
            a.setflags(write=False)
            frozen.append(a)
        if coords is not None:
            coords = np.array(coords, dtype=np.float64)
            if coords.ndim != 2 or coords.shape[0] != counts[0]:
                raise ShapeError(f"coords must be k_0 x n, got shape {coords.shape}")
            coords.setflags(write=False)
        self._counts = counts
        self._incidence = tuple(incidence)
        self._sizes = tuple(frozen)
        self._coords = coords

    @property
    def dim(self) -> int:
        return len(self._counts) - 1

    @property
    def counts(self) -> tuple[int, ...]:
        return self._counts

    @property
    def sizes(self) -> tuple[np.ndarray, ...]:
        return self._sizes

    @property
    def incidence(self) -> tuple[SparseMatrix, ...]:
        return self._incidence

    @property
    def coords(self) -> np.ndarray | None:
        return self._coords

    def B(self, p: int) -> SparseMatrix:
        """Signed incidence between p-cells (rows) and (p+1)-cells (cols)."""
        if not 0 <= p < self.dim:
            raise IndexError(f"B_{p} undefined for a {self.dim}-complex")
        return self._incidence[p]

    def measured_incidence(self, p: int) -> SparseMatrix:
        """M_p with entries (mu_p^i / mu_{p+1}^j) * B_p^ij."""
        b = self.B(p)
        ratio = self._sizes[p][b.rows] / self._sizes[p + 1][b.cols]
        return SparseMatrix(b.shape, b.rows, b.cols, b.vals * ratio)

    def boundary_matrix(self, p: int) -> SparseMatrix:
        """Matrix of the boundary operator on p-chains, shape k_{p-1} x k_p."""
        if not 1 <= p <= self.dim:
            raise IndexError(f"boundary_matrix needs 1 <= p <= {self.dim}, got {p}")
        return self.measured_incidence(p - 1)

    def coboundary_matrix(self, p: int) -> SparseMatrix:
        """Matrix of the coboundary on p-cochains, shape k_{p+1} x k_p."""
        if not 0 <= p <= self.dim - 1:
            raise IndexError(f"coboundary_matrix needs 0 <= p <= {self.dim - 1}, got {p}")
        return transpose(self.measured_incidence(p))

    def faces(self, p: int, j: int) -> dict[int, int]:
        """Signed (p-1)-faces of the p-cell with 0-based index ``j``."""
        return {i: int(v) for i, v in self.B(p - 1).column(j).items()}

    def euler_characteristic(self) -> int:
        return sum((-1) ** p * k for p, k in enumerate(self._counts))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellComplex):
            return NotImplemented
        if self._counts != other._counts:
            return False
        if any(a != b for a, b in zip(self._incidence, other._incidence)):
            return False
        if any(not np.array_equal(a, b) for a, b in zip(self._sizes, other._sizes)):
            return False
        if (self._coords is None) != (other._coords is None):
            return False
        return self._coords is None or np.array_equal(self._coords, other._coords)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        geo = "" if self._coords is None else f", coords={self._coords.shape[1]}d"
        return f"CellComplex(counts={self._counts}{geo})"


def point_complex(n: int = 1, coords=None) -> CellComplex:
    """A 0-complex of ``n`` isolated points."""
    return CellComplex((n,), (), coords=coords)


@dataclass
class ValidationReport:
    ok: bool
    problems: list[str] = field(default_factory=list)
    #: max |([d_p][d_{p+1}])_ij| keyed by p
    residuals: dict[int, float] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        lines = ["valid" if self.ok else "INVALID"]
        lines += [f"  dd residual p={p}: {r:.3e}" for p, r in sorted(self.residuals.items())]
        lines += [f"  {msg}" for msg in self.problems]
        return "\n".join(lines)


def validate(k: CellComplex, tol: float = RESIDUAL_TOL) -> ValidationReport:
    """Check sizes, incidence values and the chain-complex axiom.

    Each entry of ``[d_p][d_{p+1}]`` must vanish to within ``tol`` times the
    magnitude of the terms summed into it (never less than ``tol`` itself), so
    complexes with very small cells are not rejected for rounding alone. The
    reported residuals are the raw maxima.
    """
    problems = []
    for p, s in enumerate(k.sizes):
        bad = np.flatnonzero(~(s > 0))
        if len(bad):
            problems.append(f"non-positive size on {p}-cell {bad[0] + 1}")
    if k.counts[0] and not np.all(k.sizes[0] == 1.0):
        problems.append("0-cell sizes must be exactly 1")
    for p, b in enumerate(k.incidence):
        if b.nnz and not np.all(np.abs(b.vals) == 1.0):
            problems.append(f"B_{p} holds values other than +1/-1")
    if k.coords is not None and not np.all(np.isfinite(k.coords)):
        problems.append("non-finite vertex coordinate")
    residuals = {}
    for p in range(1, k.dim):
        a, b = k.boundary_matrix(p), k.boundary_matrix(p + 1)
        dd = multiply(a, b)
        residuals[p] = dd.max_abs()
        if not dd.nnz:
            continue
        # entries are judged against the magnitude of the terms that cancel
        mag = multiply(elementwise_abs(a), elementwise_abs(b)).to_scipy()
        bound = tol * np.maximum(1.0, np.asarray(mag[dd.rows, dd.cols]).ravel())
        bad = np.flatnonzero(np.abs(dd.vals) > bound)
        if len(bad):
            w = bad[np.argmax(np.abs(dd.vals[bad]))]
            problems.append(
                f"boundary of boundary nonzero: p={p}, {p - 1}-cell {dd.rows[w] + 1}, "
                f"{p + 1}-cell {dd.cols[w] + 1}, value {dd.vals[w]:.3e}"
            )
    return ValidationReport(not problems, problems, residuals)


# -- chains and cochains ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Chain:
    """Coefficients of a p-chain on the unit-chain basis."""

    complex: CellComplex
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if not 0 <= self.dim <= self.complex.dim:
            raise ValueError(f"no {self.dim}-cells in a {self.complex.dim}-complex")
        if len(c) != self.complex.counts[self.dim]:
            raise ShapeError(
                f"{len(c)} coefficients for {self.complex.counts[self.dim]} {self.dim}-cells"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def unit(cls, k: CellComplex, dim: int, ordinal: int) -> "Chain":
        """Unit chain on the cell with 1-based ``ordinal``."""
        c = np.zeros(k.counts[dim])
        c[ordinal - 1] = 1.0
        return cls(k, dim, c)

    @classmethod
    def zero(cls, k: CellComplex, dim: int) -> "Chain":
        return cls(k, dim, np.zeros(k.counts[dim]))


@dataclass(frozen=True, eq=False)
class Cochain:
    """Coefficients of a p-cochain on the dual basis."""

    complex: CellComplex
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if not 0 <= self.dim <= self.complex.dim:
            raise ValueError(f"no {self.dim}-cells in a {self.complex.dim}-complex")
        if len(c) != self.complex.counts[self.dim]:
            raise ShapeError(
                f"{len(c)} coefficients for {self.complex.counts[self.dim]} {self.dim}-cells"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def unit(cls, k: CellComplex, dim: int, ordinal: int) -> "Cochain":
        c = np.zeros(k.counts[dim])
        c[ordinal - 1] = 1.0
        return cls(k, dim, c)

    @classmethod
    def zero(cls, k: CellComplex, dim: int) -> "Cochain":
        return cls(k, dim, np.zeros(k.counts[dim]))


def boundary(c: Chain) -> Chain:
    if c.dim < 1:
        raise ValueError("the boundary of a 0-chain is undefined")
    return Chain(c.complex, c.dim - 1, mat_vec(c.complex.boundary_matrix(c.dim), c.coeffs))


def coboundary(g: Cochain) -> Cochain:
    if g.dim >= g.complex.dim:
        raise ValueError(f"the coboundary of a top-dimensional ({g.dim}) cochain is undefined")
    return Cochain(g.complex, g.dim + 1, mat_vec(g.complex.coboundary_matrix(g.dim), g.coeffs))


def pairing(g: Cochain, c: Chain) -> float:
    """Duality pairing <g, c>."""
    if g.complex is not c.complex:
        raise ValueError("cochain and chain live on different complexes")
    if g.dim != c.dim:
        raise ValueError(f"cannot pair a {g.dim}-cochain with a {c.dim}-chain")
    return float(g.coeffs @ c.coeffs)


def chain_map_check(
    phi: Sequence[SparseMatrix],
    src: CellComplex,
    dst: CellComplex,
    tol: float = RESIDUAL_TOL,
) -> tuple[bool, float]:
    """Check that ``phi`` commutes with the boundary operators.

    ``phi[p]`` maps p-chains of ``src`` to p-chains of ``dst``. Returns whether
    every square commutes within ``tol`` and the largest residual.
    """
    if src.dim != dst.dim or len(phi) != src.dim + 1:
        raise ShapeError("phi needs one matrix per dimension of matching complexes")
    for p, m in enumerate(phi):
        if m.shape != (dst.counts[p], src.counts[p]):
            raise ShapeError(
                f"phi_{p} has shape {m.shape}, expected {(dst.counts[p], src.counts[p])}"
            )
    worst = 0.0
    for p in range(1, src.dim + 1):
        lhs = multiply(dst.boundary_matrix(p), phi[p])
        rhs = multiply(phi[p - 1], src.boundary_matrix(p))
        worst = max(worst, max_abs_diff(lhs, rhs))
    return worst <= tol, worst


def incidence_abs_transpose(k: CellComplex, p: int) -> SparseMatrix:
    """``abs(B_{p-1})^t``, the face-counting operator used by classification."""
    return transpose(elementwise_abs(k.B(p - 1)))
