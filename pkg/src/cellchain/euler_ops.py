"""Make operators: split a (p+1)-cell in two and add a separating p-cell.

Each make operator touches at most three coboundary matrices:

* ``delta_{p+1}`` gains a column, ``delta_{p+1} @ C``;
* ``delta_{p-1}`` gains a row, ``R @ delta_{p-1}``;
* ``delta_p`` gains a row and a column, ``sum_i S_i @ delta_p @ T_i``.

The operator matrices are derived from a :class:`SplitDescriptor`. The new
complex is read back from the transformed matrices (incidence is the sign
pattern, sizes come from the descriptor) and validated before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .complex import CellComplex, ValidationReport, validate
from .hasse import HasseMatrix, compose_hasse, hasse_layout
from .sparse import (
    ShapeError,
    SparseMatrix,
    add,
    block_compose,
    multiply,
    transpose,
)

#: relative tolerance used when comparing a derived new row with the declared one
ROW_MATCH_TOL = 1e-12


class InvalidDescriptorError(ValueError):
    """The descriptor does not fit the complex it is applied to."""


class MakeRejected(ValueError):
    """The split would break the chain-complex axiom; the input is unchanged."""

    def __init__(self, report: ValidationReport):
        super().__init__(f"make operator rejected:\n{report}")
        self.report = report


@dataclass(frozen=True)
class SplitDescriptor:
    """Everything a make operator needs to split one (p+1)-cell.

    Ordinals are 1-based. ``keep`` and ``new`` partition the signed p-faces of
    the target; the split cell keeps its ordinal and the ``keep`` faces, the
    appended (p+1)-cell takes the ``new`` faces. ``new_cell_boundary`` is the
    signed (p-1)-boundary of the separating p-cell (empty when p = 0).
    ``t`` is the share of the target's size left on the kept fragment.
    """

    p: int
    target: int
    keep: tuple[tuple[int, int], ...]
    new: tuple[tuple[int, int], ...]
    new_cell_boundary: tuple[tuple[int, int], ...] = ()
    t: float = 0.5
    new_cell_size: float = 1.0
    new_vertex: tuple[float, ...] | None = None

    def __post_init__(self):
        for name in ("keep", "new", "new_cell_boundary"):
            pairs = tuple((int(o), int(s)) for o, s in getattr(self, name))
            object.__setattr__(self, name, pairs)
        if self.new_vertex is not None:
            object.__setattr__(self, "new_vertex", tuple(float(x) for x in self.new_vertex))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "new_cell_size", float(self.new_cell_size))


@dataclass(frozen=True, eq=False)
class MakeOperators:
    """The matrices realizing one make operator on a specific complex."""

    p: int
    h: int
    #: sign with which the kept fragment references the new p-cell
    sign: int
    S: tuple[SparseMatrix, SparseMatrix, SparseMatrix]
    T: tuple[SparseMatrix, SparseMatrix, SparseMatrix]
    #: diagonal scale and appended-column coefficients of C (None if p+1 = d)
    column_scale: np.ndarray | None
    column_coeffs: np.ndarray | None
    #: appended-row coefficients of R (None if p = 0)
    row_coeffs: np.ndarray | None
    #: declared row of the new p-cell in delta_{p-1}, used when R cannot produce it
    declared_row: np.ndarray | None
    new_counts: tuple[int, ...]
    new_sizes: tuple[np.ndarray, ...]
    new_coords: np.ndarray | None


@dataclass(frozen=True, eq=False)
class MakeRecord:
    """A make step with its input kept around, so it can be undone."""

    before: CellComplex
    after: CellComplex
    descriptor: SplitDescriptor

    def undo(self) -> CellComplex:
        return self.before


# -- the three matrix transformations ----------------------------------------


def column_operator(n: int, coeffs, scale=None) -> SparseMatrix:
    """``C = [diag(scale) | coeffs]``, shape n x (n+1); ``scale`` defaults to ones."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    scale = np.ones(n) if scale is None else np.asarray(scale, dtype=np.float64)
    if len(coeffs) != n or len(scale) != n:
        raise ShapeError(f"column operator needs {n} coefficients")
    idx = np.arange(n)
    nz = np.flatnonzero(coeffs)
    return SparseMatrix(
        (n, n + 1),
        np.concatenate([idx, nz]),
        np.concatenate([idx, np.full(len(nz), n)]),
        np.concatenate([scale, coeffs[nz]]),
    )


def row_operator(m: int, coeffs) -> SparseMatrix:
    """``R = [I ; coeffs]``, shape (m+1) x m."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if len(coeffs) != m:
        raise ShapeError(f"row operator needs {m} coefficients")
    idx = np.arange(m)
    nz = np.flatnonzero(coeffs)
    return SparseMatrix(
        (m + 1, m),
        np.concatenate([idx, np.full(len(nz), m)]),
        np.concatenate([idx, nz]),
        np.concatenate([np.ones(m), coeffs[nz]]),
    )


def add_column(delta: SparseMatrix, coeffs, scale=None) -> SparseMatrix:
    """Append the column ``delta @ coeffs`` (after rescaling columns by ``scale``)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if len(coeffs) != delta.ncols:
        raise ShapeError(f"{len(coeffs)} coefficients for {delta.ncols} columns")
    return multiply(delta, column_operator(delta.ncols, coeffs, scale))


def add_row(delta: SparseMatrix, coeffs) -> SparseMatrix:
    """Append the row ``coeffs @ delta``."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if len(coeffs) != delta.nrows:
        raise ShapeError(f"{len(coeffs)} coefficients for {delta.nrows} rows")
    return multiply(row_operator(delta.nrows, coeffs), delta)


def split_row_column(
    delta: SparseMatrix,
    S: Sequence[SparseMatrix],
    T: Sequence[SparseMatrix],
) -> SparseMatrix:
    """``sum_i S_i @ delta @ T_i``."""
    if len(S) != len(T) or not S:
        raise ShapeError("S and T families must be non-empty and of equal length")
    total = None
    for s, t in zip(S, T):
        if s.ncols != delta.nrows or t.nrows != delta.ncols:
            raise ShapeError(f"S {s.shape} / T {t.shape} do not conform to {delta.shape}")
        term = multiply(multiply(s, delta), t)
        total = term if total is None else add(total, term)
    return total


# -- deriving the operators from a descriptor --------------------------------


def _check_descriptor(k: CellComplex, desc: SplitDescriptor) -> dict[int, int]:
    p, d = desc.p, k.dim
    if not 0 <= p < d:
        raise InvalidDescriptorError(f"p={p} out of range for a {d}-complex")
    if not 1 <= desc.target <= k.counts[p + 1]:
        raise InvalidDescriptorError(f"no {p + 1}-cell with ordinal {desc.target}")
    if not (math.isfinite(desc.t) and 0.0 < desc.t < 1.0):
        raise InvalidDescriptorError(f"size split t={desc.t} must lie in (0, 1)")
    if p > 0 and not (math.isfinite(desc.new_cell_size) and desc.new_cell_size > 0):
        raise InvalidDescriptorError(f"new cell size {desc.new_cell_size} must be positive")
    faces = {i + 1: s for i, s in k.faces(p + 1, desc.target - 1).items()}
    side = {}
    for o, s in desc.keep + desc.new:
        if o in side:
            raise InvalidDescriptorError(f"{p}-cell {o} assigned to both sides")
        side[o] = s
    if set(side) != set(faces):
        raise InvalidDescriptorError(
            f"partition {sorted(side)} does not match the faces {sorted(faces)} "
            f"of {p + 1}-cell {desc.target}"
        )
    for o, s in side.items():
        if s != faces[o]:
            raise InvalidDescriptorError(f"sign of {p}-cell {o} is {faces[o]}, descriptor says {s}")
    if p == 0 and desc.new_cell_boundary:
        raise InvalidDescriptorError("a new 0-cell has no boundary")
    seen = set()
    for o, s in desc.new_cell_boundary:
        if not 1 <= o <= k.counts[p - 1]:
            raise InvalidDescriptorError(f"no {p - 1}-cell with ordinal {o}")
        if s not in (-1, 1) or o in seen:
            raise InvalidDescriptorError(f"bad boundary entry ({o}, {s})")
        seen.add(o)
    if desc.new_vertex is not None:
        if p != 0 or k.coords is None:
            raise InvalidDescriptorError("new_vertex only applies to p=0 on a complex with coords")
        if len(desc.new_vertex) != k.coords.shape[1]:
            raise InvalidDescriptorError("new_vertex has the wrong number of coordinates")
    return faces


def new_cell_sign(k: CellComplex, desc: SplitDescriptor) -> int:
    """Sign with which the kept fragment references the new p-cell.

    For p = 0 the fragment must stay an edge from one vertex to another; for
    p >= 1 it is the sign that cancels the kept faces' boundary against the
    declared boundary of the new cell. Defaults to +1 when undetermined.
    """
    if desc.p == 0:
        tot = sum(s for _, s in desc.keep)
        return -tot if tot in (-1, 1) else 1
    b = k.B(desc.p - 1)
    v = np.zeros(k.counts[desc.p - 1])
    for o, s in desc.keep:
        for i, x in b.column(o - 1).items():
            v[i] += s * x
    for o, s in desc.new_cell_boundary:
        if v[o - 1] != 0:
            return -int(np.sign(v[o - 1])) * s
    return 1


def make_operators(k: CellComplex, desc: SplitDescriptor) -> MakeOperators:
    _check_descriptor(k, desc)
    p, d = desc.p, k.dim
    h = desc.target - 1
    t = desc.t
    nu = 1.0 if p == 0 else desc.new_cell_size
    mu = float(k.sizes[p + 1][h])
    s = new_cell_sign(k, desc)
    kp, kq = k.counts[p], k.counts[p + 1]
    n_new = kp  # 0-based index of the new p-cell
    sizes_p = k.sizes[p]

    keep = [(o - 1, b) for o, b in desc.keep]
    new = [(o - 1, b) for o, b in desc.new]

    # S_1 routes the split row to its own slot, S_2 to the appended slot,
    # S_3 passes the other rows through.
    others = np.array([j for j in range(kq) if j != h], dtype=np.int64)
    S1 = SparseMatrix((kq + 1, kq), [h], [h], [1.0])
    S2 = SparseMatrix((kq + 1, kq), [kq], [h], [1.0])
    S3 = SparseMatrix((kq + 1, kq), others, others, np.ones(len(others)))

    # T_i rescale the fragment's faces by old/new size and carry one face's
    # entry over to the new column with the weight that yields sign*nu/size.
    def fragment_T(own, other, share, sgn):
        rows = [f for f, _ in own]
        cols = list(rows)
        vals = [1.0 / share] * len(own)
        pivot = (other or own)
        if pivot:
            f, b = pivot[0]
            rows.append(f)
            cols.append(n_new)
            vals.append(sgn * nu / (share * float(sizes_p[f]) * b))
        return SparseMatrix((kp, kp + 1), rows, cols, vals)

    if not keep and not new:
        raise InvalidDescriptorError(f"{p + 1}-cell {desc.target} has no faces to split")
    T1 = fragment_T(keep, new, t, s)
    T2 = fragment_T(new, keep, 1.0 - t, -s)
    idx = np.arange(kp)
    T3 = SparseMatrix((kp, kp + 1), idx, idx, np.ones(kp))

    column_scale = column_coeffs = None
    if p + 1 <= d - 1:
        column_scale = np.ones(kq)
        column_scale[h] = t
        column_coeffs = np.zeros(kq)
        column_coeffs[h] = 1.0 - t

    row_coeffs = declared = None
    if p >= 1:
        # the new cell's boundary, written through the rows of the new side
        row_coeffs = np.zeros(kp)
        for f, b in new:
            row_coeffs[f] = s * b * sizes_p[f] / nu
        declared = np.zeros(k.counts[p - 1])
        for o, b in desc.new_cell_boundary:
            declared[o - 1] = b * k.sizes[p - 1][o - 1] / nu

    sizes = [np.array(x) for x in k.sizes]
    sizes[p + 1][h] = t * mu
    sizes[p + 1] = np.append(sizes[p + 1], (1.0 - t) * mu)
    sizes[p] = np.append(sizes[p], nu)
    counts = list(k.counts)
    counts[p] += 1
    counts[p + 1] += 1

    coords = k.coords
    if p == 0 and coords is not None:
        if desc.new_vertex is not None:
            x = np.asarray(desc.new_vertex)
        else:
            a = coords[keep[0][0]] if keep else coords[new[0][0]]
            b_ = coords[new[0][0]] if new else a
            x = a + t * (b_ - a)
        coords = np.vstack([coords, x])

    return MakeOperators(
        p, h, s, (S1, S2, S3), (T1, T2, T3), column_scale, column_coeffs,
        row_coeffs, declared, tuple(counts), tuple(sizes), coords,
    )


def transform_coboundary(ops: MakeOperators, q: int, delta: SparseMatrix) -> SparseMatrix:
    """Apply the make operator to [delta_q]; unaffected q pass through."""
    p = ops.p
    if q == p:
        return split_row_column(delta, ops.S, ops.T)
    if q == p + 1:
        return add_column(delta, ops.column_coeffs, ops.column_scale)
    if q == p - 1:
        out = add_row(delta, ops.row_coeffs)
        derived = out.submatrix(delta.nrows, delta.nrows + 1, 0, delta.ncols).to_dense()[0]
        scale = max(1.0, float(np.abs(ops.declared_row).max(initial=0.0)))
        if np.abs(derived - ops.declared_row).max(initial=0.0) > ROW_MATCH_TOL * scale:
            # inconsistent descriptor: keep the declared row, validation will reject it
            declared = SparseMatrix.from_dense(ops.declared_row[None, :])
            return block_compose({(0, 0): delta, (1, 0): declared}, [delta.nrows, 1], [delta.ncols])
        # R sums several rows, so faces that cancel can leave rounding residue
        derived[ops.declared_row == 0] = 0.0
        row = SparseMatrix.from_dense(derived[None, :])
        return block_compose({(0, 0): delta, (1, 0): row}, [delta.nrows, 1], [delta.ncols])
    return delta


def make_coboundaries(k: CellComplex, desc: SplitDescriptor) -> tuple[MakeOperators, dict[int, SparseMatrix]]:
    """Operators and every transformed coboundary matrix of the refined complex."""
    ops = make_operators(k, desc)
    out = {q: transform_coboundary(ops, q, k.coboundary_matrix(q)) for q in range(k.dim)}
    return ops, out


def _complex_from_coboundaries(ops: MakeOperators, deltas: dict[int, SparseMatrix]) -> CellComplex:
    incidence = []
    for q in range(len(ops.new_counts) - 1):
        m = transpose(deltas[q])
        incidence.append(SparseMatrix(m.shape, m.rows, m.cols, np.sign(m.vals)))
    return CellComplex(ops.new_counts, incidence, ops.new_sizes, ops.new_coords)


def make(k: CellComplex, desc: SplitDescriptor) -> CellComplex:
    """Split the target (p+1)-cell and add the separating p-cell.

    Raises:
        InvalidDescriptorError: the descriptor does not fit ``k``.
        MakeRejected: the result would violate the chain-complex axiom.
    """
    ops, deltas = make_coboundaries(k, desc)
    out = _complex_from_coboundaries(ops, deltas)
    report = validate(out)
    if not report.ok:
        raise MakeRejected(report)
    return out


def make_recorded(k: CellComplex, desc: SplitDescriptor) -> MakeRecord:
    return MakeRecord(k, make(k, desc), desc)


def hasse_make(h: HasseMatrix, k: CellComplex, desc: SplitDescriptor) -> tuple[HasseMatrix, CellComplex]:
    """Update a Hasse matrix block by block instead of reassembling it."""
    row_dims, col_dims = hasse_layout(k.counts)
    if h.row_dims != row_dims or h.col_dims != col_dims or h.shape != (
        sum(k.counts[q] for q in row_dims),
        sum(k.counts[q] for q in col_dims),
    ):
        raise ShapeError("Hasse matrix does not belong to this complex")
    refined = make(k, desc)
    ops = make_operators(k, desc)
    blocks = {}
    for q in row_dims:
        # diagonal block [delta_{q-1}], upper block [delta_q]^t
        blocks[(q, q - 1)] = transform_coboundary(ops, q - 1, h.block(q, q - 1))
        if q + 1 <= k.dim:
            upper = transpose(h.block(q, q + 1))
            blocks[(q, q + 1)] = transpose(transform_coboundary(ops, q, upper))
    return compose_hasse(blocks, ops.new_counts), refined


def derive_descriptor(
    k: CellComplex,
    p: int,
    target: int,
    keep: Iterable[int],
    t: float = 0.5,
    new_cell_size: float = 1.0,
    new_vertex=None,
) -> SplitDescriptor:
    """Build a descriptor from the set of kept faces alone.

    Face signs are read from the complex; for p >= 1 the new cell's boundary
    is chosen so that the kept fragment references the new cell with +1.
    """
    if not 0 <= p < k.dim or not 1 <= target <= k.counts[p + 1]:
        raise InvalidDescriptorError(f"no {p + 1}-cell {target} to split")
    keep = set(int(o) for o in keep)
    faces = {i + 1: s for i, s in k.faces(p + 1, target - 1).items()}
    if not keep <= set(faces):
        raise InvalidDescriptorError(f"{sorted(keep - set(faces))} are not faces of {p + 1}-cell {target}")
    keep_pairs = tuple((o, faces[o]) for o in sorted(faces) if o in keep)
    new_pairs = tuple((o, faces[o]) for o in sorted(faces) if o not in keep)
    bnd: tuple[tuple[int, int], ...] = ()
    if p >= 1:
        b = k.B(p - 1)
        w = np.zeros(k.counts[p - 1])
        for o, s in keep_pairs:
            for i, x in b.column(o - 1).items():
                w[i] -= s * x
        if np.any(np.abs(w) > 1):
            raise InvalidDescriptorError("kept faces do not bound a single separating cell")
        bnd = tuple((int(i) + 1, int(w[i])) for i in np.flatnonzero(w))
    return SplitDescriptor(p, target, keep_pairs, new_pairs, bnd, t, new_cell_size, new_vertex)
