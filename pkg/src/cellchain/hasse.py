"""Hasse matrix: every coboundary block of a complex packed into one matrix.

Rows are indexed by odd-dimensional cells (1-cells first, then 3-cells, ...),
columns by even-dimensional cells (0-cells, 2-cells, ...). Row band ``q`` (q
odd) holds [delta_{q-1}] on the diagonal and [delta_q]^t to its right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import CellComplex, validate
from .sparse import SparseMatrix, block_compose, transpose


class InvalidComplexError(ValueError):
    def __init__(self, report):
        super().__init__(str(report))
        self.report = report


@dataclass(frozen=True, eq=False)
class HasseMatrix:
    matrix: SparseMatrix
    #: dimensions indexing the row bands, in order
    row_dims: tuple[int, ...]
    #: dimensions indexing the column bands, in order
    col_dims: tuple[int, ...]
    #: start row of each row band
    row_offsets: tuple[int, ...]
    #: start column of each column band
    col_offsets: tuple[int, ...]
    dim: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def euler_characteristic(self) -> int:
        """Column count minus row count."""
        n, m = self.matrix.shape
        return m - n

    def band_sizes(self) -> tuple[list[int], list[int]]:
        n, m = self.matrix.shape
        rs = list(np.diff(list(self.row_offsets) + [n]))
        cs = list(np.diff(list(self.col_offsets) + [m]))
        return [int(x) for x in rs], [int(x) for x in cs]

    def block(self, row_dim: int, col_dim: int) -> SparseMatrix:
        """The block whose rows are ``row_dim``-cells and cols ``col_dim``-cells."""
        rs, cs = self.band_sizes()
        i, j = self.row_dims.index(row_dim), self.col_dims.index(col_dim)
        r0, c0 = self.row_offsets[i], self.col_offsets[j]
        return self.matrix.submatrix(r0, r0 + rs[i], c0, c0 + cs[j])


def _offsets(sizes) -> tuple[int, ...]:
    return tuple(int(x) for x in np.concatenate([[0], np.cumsum(sizes)])[:-1])


def hasse_layout(counts) -> tuple[tuple[int, ...], tuple[int, ...]]:
    d = len(counts) - 1
    return tuple(range(1, d + 1, 2)), tuple(range(0, d + 1, 2))


def hasse_blocks(k: CellComplex) -> dict[tuple[int, int], SparseMatrix]:
    """Nonzero blocks keyed by (row dimension, column dimension)."""
    blocks = {}
    for q in range(1, k.dim + 1, 2):
        blocks[(q, q - 1)] = k.coboundary_matrix(q - 1)
        if q + 1 <= k.dim:
            blocks[(q, q + 1)] = transpose(k.coboundary_matrix(q))
    return blocks


def compose_hasse(blocks, counts) -> HasseMatrix:
    """Assemble a Hasse matrix from blocks keyed by (row dim, col dim)."""
    row_dims, col_dims = hasse_layout(counts)
    rsz = [counts[q] for q in row_dims]
    csz = [counts[q] for q in col_dims]
    slots = {(row_dims.index(r), col_dims.index(c)): b for (r, c), b in blocks.items()}
    return HasseMatrix(
        block_compose(slots, rsz, csz),
        row_dims,
        col_dims,
        _offsets(rsz),
        _offsets(csz),
        len(counts) - 1,
    )


def assemble_hasse(k: CellComplex) -> HasseMatrix:
    report = validate(k)
    if not report.ok:
        raise InvalidComplexError(report)
    return compose_hasse(hasse_blocks(k), k.counts)


def dual_hasse(h: HasseMatrix) -> HasseMatrix:
    """Hasse matrix of the dual complex: the transpose, with band roles swapped."""
    return HasseMatrix(
        transpose(h.matrix), h.col_dims, h.row_dims, h.col_offsets, h.row_offsets, h.dim
    )


def euler_characteristic(k: CellComplex) -> int:
    return k.euler_characteristic()


def euler_characteristic_from_counts(counts) -> int:
    return sum((-1) ** p * int(n) for p, n in enumerate(counts))


def euler_union(chi_m: int, chi_n: int, chi_intersection: int) -> int:
    """Inclusion-exclusion for the Euler characteristic of a union."""
    return chi_m + chi_n - chi_intersection


def euler_product(chi_m: int, chi_n: int) -> int:
    return chi_m * chi_n
