"""Inner products on chains, adjoint boundaries and Laplace-de Rham operators.

The Laplacian is assembled with a positive diagonal (positive semidefinite
convention). With the identity inner product it reduces to the sum of the two
adjacency products ``M_p M_p^t + M_{p-1}^t M_{p-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .complex import CellComplex, Chain
from .sparse import ShapeError, SparseMatrix, add, multiply, transpose

GRAM_KINDS = ("trivial", "diagonal", "full")

#: symmetry tolerance accepted for a full Gram matrix
SYMMETRY_TOL = 1e-12


class SingularGramError(ValueError):
    """A Gram matrix is not invertible (or not positive definite)."""


@dataclass(frozen=True, eq=False)
class GramStructure:
    """One symmetric positive-definite matrix per dimension.

    Build with :meth:`trivial`, :meth:`diagonal` or :meth:`full`. ``blocks[p]``
    is ``None`` for the identity, a 1-D array for a diagonal, or a 2-D array.
    """

    kind: str
    counts: tuple[int, ...]
    blocks: tuple

    @classmethod
    def trivial(cls, k: CellComplex) -> "GramStructure":
        return cls("trivial", k.counts, (None,) * len(k.counts))

    @classmethod
    def diagonal(cls, k: CellComplex, diagonals: Sequence) -> "GramStructure":
        """Diagonal Gram matrices; a ``None`` entry stands for the identity."""
        if len(diagonals) != len(k.counts):
            raise ShapeError(f"need {len(k.counts)} diagonals, got {len(diagonals)}")
        blocks = []
        for p, g in enumerate(diagonals):
            if g is None:
                blocks.append(None)
                continue
            g = np.array(g, dtype=np.float64).ravel()
            if len(g) != k.counts[p]:
                raise ShapeError(f"Gram diagonal {p} has {len(g)} entries for {k.counts[p]} cells")
            if not np.all(g > 0):
                raise SingularGramError(f"Gram diagonal {p} has a non-positive entry")
            g.setflags(write=False)
            blocks.append(g)
        return cls("diagonal", k.counts, tuple(blocks))

    @classmethod
    def full(cls, k: CellComplex, matrices: Sequence, seed: int = 0) -> "GramStructure":
        """Dense symmetric positive-definite Gram matrices (``None`` = identity).

        Positive-definiteness is spot-checked with random quadratic forms.
        """
        if len(matrices) != len(k.counts):
            raise ShapeError(f"need {len(k.counts)} Gram matrices, got {len(matrices)}")
        rng = np.random.default_rng(seed)
        blocks = []
        for p, g in enumerate(matrices):
            if g is None:
                blocks.append(None)
                continue
            g = np.array(g, dtype=np.float64)
            n = k.counts[p]
            if g.shape != (n, n):
                raise ShapeError(f"Gram matrix {p} has shape {g.shape}, expected {(n, n)}")
            if np.abs(g - g.T).max(initial=0.0) > SYMMETRY_TOL:
                raise ValueError(f"Gram matrix {p} is not symmetric")
            x = rng.standard_normal((n, 32))
            if n and not np.all(np.einsum("ij,ik,kj->j", x, g, x) > 0):
                raise SingularGramError(f"Gram matrix {p} is not positive definite")
            g.setflags(write=False)
            blocks.append(g)
        return cls("full", k.counts, tuple(blocks))

    def matrix(self, p: int) -> SparseMatrix:
        g = self.blocks[p]
        if g is None:
            return SparseMatrix.identity(self.counts[p])
        if g.ndim == 1:
            return SparseMatrix.diagonal(g)
        return SparseMatrix.from_dense(g)

    def inverse(self, p: int, allow_dense: bool = False) -> SparseMatrix:
        g = self.blocks[p]
        if g is None:
            return SparseMatrix.identity(self.counts[p])
        if g.ndim == 1:
            return SparseMatrix.diagonal(1.0 / g)
        if not allow_dense:
            raise ValueError("inverting a full Gram matrix requires allow_dense=True")
        try:
            inv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise SingularGramError(f"Gram matrix {p} is singular") from exc
        return SparseMatrix.from_dense(inv)

    def is_identity(self, p: int) -> bool:
        return self.blocks[p] is None


def _check_gram(k: CellComplex, g: GramStructure) -> None:
    if g.counts != k.counts:
        raise ShapeError(f"Gram structure built for counts {g.counts}, complex has {k.counts}")


def adjacency_plus(k: CellComplex, p: int) -> SparseMatrix:
    """``M_p M_p^t``: adjacency of p-cells through shared (p+1)-cofaces."""
    if not 0 <= p <= k.dim - 1:
        raise IndexError(f"adjacency_plus needs 0 <= p <= {k.dim - 1}, got {p}")
    m = k.measured_incidence(p)
    return multiply(m, transpose(m))


def adjacency_minus(k: CellComplex, p: int) -> SparseMatrix:
    """``M_{p-1}^t M_{p-1}``: adjacency of p-cells through shared (p-1)-faces."""
    if not 1 <= p <= k.dim:
        raise IndexError(f"adjacency_minus needs 1 <= p <= {k.dim}, got {p}")
    m = k.measured_incidence(p - 1)
    return multiply(transpose(m), m)


def adjoint_boundary(
    k: CellComplex, g: GramStructure, p: int, allow_dense: bool = False
) -> SparseMatrix:
    """Adjoint of the boundary on (p+1)-chains: ``G_{p+1}^{-1} M_p^t G_p``.

    Args:
        k: the complex.
        g: Gram structure on its chains.
        p: dimension of the chains the adjoint acts on, ``0 <= p <= d-1``.
        allow_dense: permit dense inversion of a full Gram matrix.

    Returns:
        A ``k_{p+1} x k_p`` matrix.
    """
    if not 0 <= p <= k.dim - 1:
        raise IndexError(f"adjoint_boundary needs 0 <= p <= {k.dim - 1}, got {p}")
    _check_gram(k, g)
    mt = transpose(k.measured_incidence(p))
    if not g.is_identity(p):
        mt = multiply(mt, g.matrix(p))
    if not g.is_identity(p + 1):
        mt = multiply(g.inverse(p + 1, allow_dense), mt)
    return mt


def laplace_derham(
    k: CellComplex, g: GramStructure, p: int, allow_dense: bool = False
) -> SparseMatrix:
    """Laplace-de Rham operator on p-cochains, ``d_p^* d_p + d_{p-1} d_{p-1}^*``.

    The adjoints come from :func:`adjoint_boundary`; terms whose operator
    does not exist (below dimension 0 or above d) are zero. The result is
    symmetric in the plain sense for the identity Gram structure; in general
    ``G_p^{-1} L`` is.
    """
    if not 0 <= p <= k.dim:
        raise IndexError(f"laplace_derham needs 0 <= p <= {k.dim}, got {p}")
    _check_gram(k, g)
    n = k.counts[p]
    up = SparseMatrix.zeros(n, n)
    down = SparseMatrix.zeros(n, n)
    if p <= k.dim - 1:
        up = multiply(transpose(adjoint_boundary(k, g, p, allow_dense)), k.coboundary_matrix(p))
    if p >= 1:
        down = multiply(k.coboundary_matrix(p - 1), transpose(adjoint_boundary(k, g, p - 1, allow_dense)))
    return add(up, down)


def pairing_gram(g: GramStructure, c: Chain, c2: Chain) -> float:
    """Inner product ``<G_p c, c2>`` of two p-chains."""
    if c.complex is not c2.complex:
        raise ValueError("chains live on different complexes")
    if c.dim != c2.dim:
        raise ValueError(f"cannot pair a {c.dim}-chain with a {c2.dim}-chain")
    if g.counts != c.complex.counts:
        raise ShapeError("Gram structure does not match the chains' complex")
    gm = g.blocks[c.dim]
    if gm is None:
        gc = c.coeffs
    elif gm.ndim == 1:
        gc = gm * c.coeffs
    else:
        gc = gm @ c.coeffs
    return float(gc @ c2.coeffs)
