"""Small real-valued sparse matrix kernel.

Matrices are immutable and kept in canonical coordinate form: entries sorted
by (row, col), no duplicate positions, no stored zeros. Products go through a
compressed-row view built on demand.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

#: entries with magnitude at or below this are dropped after products
CANCEL_TOL = 1e-14


class ShapeError(ValueError):
    """Operands do not conform."""


class SparseMatrix:
    """Immutable sparse matrix in sorted coordinate form.

    Args:
        shape: ``(rows, cols)``.
        rows, cols: 0-based index arrays.
        vals: entry values.

    Duplicate positions are rejected and exact zeros are dropped.
    """

    __slots__ = ("_shape", "_rows", "_cols", "_vals")

    def __init__(self, shape, rows=(), cols=(), vals=()):
        nr, nc = (int(shape[0]), int(shape[1]))
        if nr < 0 or nc < 0:
            raise ValueError(f"negative shape {shape}")
        r = np.asarray(rows, dtype=np.int64).ravel()
        c = np.asarray(cols, dtype=np.int64).ravel()
        v = np.asarray(vals, dtype=np.float64).ravel()
        if not (len(r) == len(c) == len(v)):
            raise ValueError("rows, cols and vals differ in length")
        if len(r):
            if r.min() < 0 or r.max() >= nr or c.min() < 0 or c.max() >= nc:
                raise IndexError(f"entry index out of range for shape {(nr, nc)}")
        keep = v != 0.0
        r, c, v = r[keep], c[keep], v[keep]
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        if len(r) > 1:
            dup = (np.diff(r) == 0) & (np.diff(c) == 0)
            if dup.any():
                i = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate entry at ({r[i]}, {c[i]})")
        for a in (r, c, v):
            a.setflags(write=False)
        self._shape = (nr, nc)
        self._rows, self._cols, self._vals = r, c, v

    # -- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "SparseMatrix":
        return cls((nrows, ncols))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return cls((n, n), idx, idx, np.ones(n))

    @classmethod
    def diagonal(cls, values) -> "SparseMatrix":
        v = np.asarray(values, dtype=np.float64)
        idx = np.arange(len(v))
        return cls((len(v), len(v)), idx, idx, v)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        r, c = np.nonzero(a)
        return cls(a.shape, r, c, a[r, c])

    @classmethod
    def from_scipy(cls, m, tol: float = CANCEL_TOL) -> "SparseMatrix":
        coo = sp.coo_array(m)
        coo.sum_duplicates()
        keep = np.abs(coo.data) > tol
        return cls(coo.shape, coo.row[keep], coo.col[keep], coo.data[keep])

    # -- accessors ----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._shape

    @property
    def nrows(self) -> int:
        return self._shape[0]

    @property
    def ncols(self) -> int:
        return self._shape[1]

    @property
    def nnz(self) -> int:
        return len(self._vals)

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def cols(self) -> np.ndarray:
        return self._cols

    @property
    def vals(self) -> np.ndarray:
        return self._vals

    def triplets(self) -> Iterable[tuple[int, int, float]]:
        return zip(self._rows.tolist(), self._cols.tolist(), self._vals.tolist())

    def __getitem__(self, key) -> float:
        i, j = key
        if not (0 <= i < self.nrows and 0 <= j < self.ncols):
            raise IndexError(key)
        lo = np.searchsorted(self._rows, i, side="left")
        hi = np.searchsorted(self._rows, i, side="right")
        k = lo + np.searchsorted(self._cols[lo:hi], j)
        if k < hi and self._cols[k] == j:
            return float(self._vals[k])
        return 0.0

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self._shape)
        out[self._rows, self._cols] = self._vals
        return out

    def to_scipy(self) -> sp.csr_array:
        return sp.csr_array((self._vals, (self._rows, self._cols)), shape=self._shape)

    def column(self, j: int) -> dict[int, float]:
        """Nonzero entries of column ``j`` as ``{row: value}``."""
        sel = self._cols == j
        return dict(zip(self._rows[sel].tolist(), self._vals[sel].tolist()))

    def row(self, i: int) -> dict[int, float]:
        lo = np.searchsorted(self._rows, i, side="left")
        hi = np.searchsorted(self._rows, i, side="right")
        return dict(zip(self._cols[lo:hi].tolist(), self._vals[lo:hi].tolist()))

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "SparseMatrix":
        """Block ``[r0:r1, c0:c1]`` as a new matrix."""
        sel = (self._rows >= r0) & (self._rows < r1) & (self._cols >= c0) & (self._cols < c1)
        return SparseMatrix(
            (r1 - r0, c1 - c0), self._rows[sel] - r0, self._cols[sel] - c0, self._vals[sel]
        )

    # -- algebra ------------------------------------------------------------

    @property
    def T(self) -> "SparseMatrix":
        return transpose(self)

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return multiply(self, other)
        return mat_vec(self, other)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        return add(self, other)

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "SparseMatrix":
        return scale(self, -1.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self._shape == other._shape
            and np.array_equal(self._rows, other._rows)
            and np.array_equal(self._cols, other._cols)
            and np.array_equal(self._vals, other._vals)
        )

    __hash__ = None  # type: ignore[assignment]

    def max_abs(self) -> float:
        return float(np.abs(self._vals).max()) if self.nnz else 0.0

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self._shape}, nnz={self.nnz})"


def transpose(m: SparseMatrix) -> SparseMatrix:
    return SparseMatrix((m.ncols, m.nrows), m.cols, m.rows, m.vals)


def multiply(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Matrix product; cancellations at or below ``CANCEL_TOL`` are dropped."""
    if a.ncols != b.nrows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if a.nnz == 0 or b.nnz == 0:
        return SparseMatrix((a.nrows, b.ncols))
    return SparseMatrix.from_scipy(a.to_scipy() @ b.to_scipy())


def mat_vec(m: SparseMatrix, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or len(v) != m.ncols:
        raise ShapeError(f"cannot apply {m.shape} matrix to vector of shape {v.shape}")
    out = np.zeros(m.nrows)
    np.add.at(out, m.rows, m.vals * v[m.cols])
    return out


def add(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    if a.shape != b.shape:
        raise ShapeError(f"cannot add {a.shape} and {b.shape}")
    return SparseMatrix.from_scipy(a.to_scipy() + b.to_scipy())


def scale(m: SparseMatrix, factor: float) -> SparseMatrix:
    return SparseMatrix(m.shape, m.rows, m.cols, m.vals * factor)


def elementwise_abs(m: SparseMatrix) -> SparseMatrix:
    return SparseMatrix(m.shape, m.rows, m.cols, np.abs(m.vals))


def elementwise_sgn(v, eps: float) -> np.ndarray:
    """Sign of each entry with a dead band: ``|v_i| <= eps`` maps to 0."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    v = np.asarray(v, dtype=np.float64)
    out = np.zeros(v.shape, dtype=np.int64)
    out[v > eps] = 1
    out[v < -eps] = -1
    return out


def matrix_sgn(m: SparseMatrix, eps: float) -> SparseMatrix:
    """``elementwise_sgn`` over the stored entries of ``m``."""
    return SparseMatrix(m.shape, m.rows, m.cols, elementwise_sgn(m.vals, eps))


def block_compose(
    blocks: Mapping[tuple[int, int], SparseMatrix],
    row_sizes: Sequence[int],
    col_sizes: Sequence[int],
) -> SparseMatrix:
    """Place blocks at cumulative offsets; missing blocks are zero."""
    roff = np.concatenate([[0], np.cumsum(row_sizes, dtype=np.int64)])
    coff = np.concatenate([[0], np.cumsum(col_sizes, dtype=np.int64)])
    rs, cs, vs = [], [], []
    for (bi, bj), blk in blocks.items():
        if not (0 <= bi < len(row_sizes) and 0 <= bj < len(col_sizes)):
            raise IndexError(f"block slot {(bi, bj)} out of range")
        want = (row_sizes[bi], col_sizes[bj])
        if blk.shape != tuple(want):
            raise ShapeError(f"block {(bi, bj)} has shape {blk.shape}, slot needs {want}")
        rs.append(blk.rows + roff[bi])
        cs.append(blk.cols + coff[bj])
        vs.append(blk.vals)
    if not rs:
        return SparseMatrix((int(roff[-1]), int(coff[-1])))
    return SparseMatrix(
        (int(roff[-1]), int(coff[-1])), np.concatenate(rs), np.concatenate(cs), np.concatenate(vs)
    )


def allclose(a: SparseMatrix, b: SparseMatrix, atol: float = 1e-12) -> bool:
    if a.shape != b.shape:
        return False
    return max_abs_diff(a, b) <= atol


def max_abs_diff(a: SparseMatrix, b: SparseMatrix) -> float:
    if a.shape != b.shape:
        raise ShapeError(f"shapes differ: {a.shape} vs {b.shape}")
    diff = a.to_scipy() - b.to_scipy()
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


# -- coordinate triplet text format ----------------------------------------


def format_real(x: float) -> str:
    return f"{x:.17g}"


def write_triplets(m: SparseMatrix, out: TextIO, header: Iterable[str] = ()) -> None:
    """Write ``rows cols nnz`` then one 1-based ``row col value`` line per entry.

    ``header`` lines are emitted first, each prefixed with ``%``.
    """
    for line in header:
        out.write(f"% {line}\n")
    out.write(f"{m.nrows} {m.ncols} {m.nnz}\n")
    for i, j, v in m.triplets():
        out.write(f"{i + 1} {j + 1} {format_real(v)}\n")


def dumps_triplets(m: SparseMatrix, header: Iterable[str] = ()) -> str:
    import io

    buf = io.StringIO()
    write_triplets(m, buf, header)
    return buf.getvalue()


def read_triplets(lines: Iterable[str]) -> SparseMatrix:
    """Inverse of ``write_triplets``; ``%`` lines and blank lines are skipped."""
    body = [ln.split() for ln in lines if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise ValueError("missing triplet header")
    try:
        nr, nc, nnz = (int(x) for x in body[0])
    except ValueError as exc:
        raise ValueError(f"bad triplet header {' '.join(body[0])!r}") from exc
    if len(body) - 1 != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(body) - 1}")
    r = np.array([int(t[0]) - 1 for t in body[1:]], dtype=np.int64)
    c = np.array([int(t[1]) - 1 for t in body[1:]], dtype=np.int64)
    v = np.array([float(t[2]) for t in body[1:]], dtype=np.float64)
    return SparseMatrix((nr, nc), r, c, v)


def loads_triplets(text: str) -> SparseMatrix:
    return read_triplets(text.splitlines())
