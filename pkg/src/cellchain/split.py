"""Hyperplane splitting of a cell complex.

Vertices are classified against the hyperplane with a tolerance, then cells
are classified dimension by dimension by summing their faces' classes. Any
p-cell with faces strictly on both sides is split by a make operator whose
separating (p-1)-cell lies on the hyperplane. The splitting is recorded as a
chain map from the input complex to the refined one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .complex import CellComplex, incidence_abs_transpose, validate
from .euler_ops import SplitDescriptor, derive_descriptor, make
from .hasse import InvalidComplexError
from .sparse import SparseMatrix, elementwise_sgn, mat_vec, multiply

log = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8


class SplitError(ValueError):
    """The splitting algorithm cannot proceed on this input."""


class NonConvexCellError(SplitError):
    def __init__(self, dim: int, ordinal: int):
        super().__init__(f"{dim}-cell {ordinal} is not convex and straddles the hyperplane")
        self.cell = (dim, ordinal)


class DegenerateGeometryError(SplitError):
    def __init__(self, dim: int, ordinal: int, why: str):
        super().__init__(f"cannot split {dim}-cell {ordinal}: {why}")
        self.cell = (dim, ordinal)


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane ``normal . x = offset``."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        n = tuple(float(x) for x in self.normal)
        if not n or not any(n):
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def parse(cls, text: str) -> "Hyperplane":
        """Parse ``"h1,...,hd,b"``."""
        try:
            vals = [float(x) for x in text.replace(" ", "").split(",") if x]
        except ValueError as exc:
            raise ValueError(f"bad hyperplane {text!r}") from exc
        if len(vals) < 2:
            raise ValueError(f"hyperplane {text!r} needs at least one normal component and b")
        return cls(tuple(vals[:-1]), vals[-1])

    @property
    def row(self) -> np.ndarray:
        """Homogeneous row ``(h_1, ..., h_d, -b)``."""
        return np.array(self.normal + (-self.offset,))

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != len(self.normal):
            raise ValueError(
                f"hyperplane lives in {len(self.normal)} dimensions, points in {pts.shape[1]}"
            )
        X = np.hstack([pts, np.ones((len(pts), 1))])
        return X @ self.row

    def format(self) -> str:
        from .sparse import format_real

        return ",".join(format_real(x) for x in self.normal + (self.offset,))


@dataclass
class Classification:
    #: final class of every cell, per dimension
    c: list[np.ndarray]
    #: face counts computed before splitting at each level (a[0] is None)
    a: list[np.ndarray | None]
    #: (label, vector) in the order the algorithm produced them
    trace: list[tuple[str, np.ndarray]] = field(default_factory=list)


@dataclass
class SubdivisionMap:
    #: zeta[p] maps unit p-chains of the input to p-chains of the output
    zeta: list[SparseMatrix]
    #: for each output cell, the (dim, 1-based ordinal) of the input cell containing it
    origin: list[list[tuple[int, int]]]
    steps: list[SplitDescriptor] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _require_coords(k: CellComplex) -> np.ndarray:
    if k.coords is None:
        raise SplitError("splitting needs vertex coordinates")
    return k.coords


def classify_vertices(k: CellComplex, plane: Hyperplane, eps: float = DEFAULT_EPS) -> np.ndarray:
    X = _require_coords(k)
    return elementwise_sgn(plane.evaluate(X), eps)


def propagate_classification(k: CellComplex, c_prev, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Sum the classes (and absolute classes) of each p-cell's faces."""
    if not 1 <= p <= k.dim:
        raise IndexError(f"cannot classify {p}-cells of a {k.dim}-complex")
    c_prev = np.asarray(c_prev)
    if len(c_prev) != k.counts[p - 1]:
        raise ValueError(f"{len(c_prev)} classes for {k.counts[p - 1]} {p - 1}-cells")
    op = incidence_abs_transpose(k, p)
    c = np.rint(mat_vec(op, c_prev)).astype(np.int64)
    a = np.rint(mat_vec(op, np.abs(c_prev))).astype(np.int64)
    return c, a


# -- geometry helpers -----------------------------------------------------


def cell_vertices(k: CellComplex, p: int, j: int) -> list[int]:
    """0-based vertex indices in the closure of p-cell ``j``."""
    cells = {j}
    for q in range(p, 0, -1):
        b = k.B(q - 1)
        cells = {i for c in cells for i in b.column(c)}
    return sorted(cells)


def _affine_frame(points: np.ndarray, tol: float = 1e-12):
    """Coordinates of ``points`` in an orthonormal frame of their affine hull."""
    center = points.mean(axis=0)
    rel = points - center
    if len(points) < 2:
        return rel[:, :0], 0
    _, s, vt = np.linalg.svd(rel, full_matrices=False)
    scale = max(1.0, float(np.abs(rel).max()))
    rank = int(np.sum(s > tol * scale))
    return rel @ vt[:rank].T, rank


def convex_area(points) -> float:
    """Area of the convex hull of coplanar points (any ambient dimension)."""
    local, rank = _affine_frame(np.asarray(points, dtype=np.float64))
    if rank < 2:
        return 0.0
    if rank > 2:
        raise ValueError("points are not coplanar")
    ang = np.arctan2(local[:, 1], local[:, 0])
    x, y = local[np.argsort(ang)].T
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _boundary_cycle(k: CellComplex, j: int) -> list[int]:
    """Vertices of 2-cell ``j`` in boundary order."""
    adj: dict[int, list[int]] = {}
    for e in k.faces(2, j):
        ends = list(k.faces(1, e))
        if len(ends) != 2:
            raise NonConvexCellError(2, j + 1)
        a, b = ends
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    if any(len(v) != 2 for v in adj.values()):
        raise NonConvexCellError(2, j + 1)
    start = min(adj)
    cycle, prev, cur = [start], None, start
    while True:
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        if nxt == start:
            break
        cycle.append(nxt)
        prev, cur = cur, nxt
    if len(cycle) != len(adj):
        raise NonConvexCellError(2, j + 1)
    return cycle


def _check_convex(k: CellComplex, p: int, j: int) -> None:
    X = k.coords
    if p == 2:
        cyc = _boundary_cycle(k, j)
        local, rank = _affine_frame(X[cyc])
        if rank != 2:
            raise DegenerateGeometryError(2, j + 1, "polygon is not two-dimensional")
        e = np.roll(local, -1, axis=0) - local
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        scale = float(np.abs(cross).max())
        if (cross > 1e-12 * scale).any() and (cross < -1e-12 * scale).any():
            raise NonConvexCellError(2, j + 1)
    elif p >= 3:
        # convex iff every facet's hyperplane supports the cell
        verts = cell_vertices(k, p, j)
        local, rank = _affine_frame(X[verts])
        if rank != p:
            raise DegenerateGeometryError(p, j + 1, f"vertices span {rank} dimensions")
        where = {v: i for i, v in enumerate(verts)}
        tol = 1e-9 * max(1.0, float(np.abs(local).max()))
        for f in k.faces(p, j):
            pts = local[[where[v] for v in cell_vertices(k, p - 1, f)]]
            rel = pts - pts.mean(axis=0)
            normal = np.linalg.svd(rel)[2][-1]
            side = (local - pts.mean(axis=0)) @ normal
            if (side > tol).any() and (side < -tol).any():
                raise NonConvexCellError(p, j + 1)


# -- the algorithm --------------------------------------------------------


def _synthesize(
    k: CellComplex, p: int, j: int, c_prev: np.ndarray, plane: Hyperplane, warnings: list[str]
) -> SplitDescriptor:
    """Descriptor splitting straddling p-cell ``j`` along the hyperplane."""
    faces = k.faces(p, j)
    keep = [f for f in faces if c_prev[f] <= 0]
    X = k.coords
    if p == 1:
        if len(faces) != 2:
            raise DegenerateGeometryError(1, j + 1, "edge does not have two endpoints")
        a = keep[0]
        b = next(f for f in faces if f != a)
        ha, hb = plane.evaluate(X[[a, b]])
        tau = ha / (ha - hb)
        if not 0.0 < tau < 1.0:
            raise DegenerateGeometryError(1, j + 1, f"intersection parameter {tau}")
        return derive_descriptor(k, 0, j + 1, [a + 1], t=tau, new_vertex=X[a] + tau * (X[b] - X[a]))

    _check_convex(k, p, j)
    desc = derive_descriptor(k, p - 1, j + 1, [f + 1 for f in keep])
    sep = [o - 1 for o, _ in desc.new_cell_boundary]
    if p == 2 and len(sep) != 2:
        raise NonConvexCellError(2, j + 1)

    def frag_vertices(side_faces):
        vs = set()
        for f in side_faces:
            vs.update(cell_vertices(k, p - 1, f))
        for g in sep:
            vs.update(cell_vertices(k, p - 2, g))
        return sorted(vs)

    sep_vertices = sorted({v for g in sep for v in cell_vertices(k, p - 2, g)})
    if p == 2:
        size = float(np.linalg.norm(X[sep_vertices[0]] - X[sep_vertices[1]]))
    elif p == 3:
        size = convex_area(X[sep_vertices])
    else:
        size = 1.0
        warnings.append(f"{p - 1}-cell separating {p}-cell {j + 1}: unit size assigned")
    if not size > 0:
        raise DegenerateGeometryError(p, j + 1, "separating cell has zero size")

    if p == 2:
        keep_area = convex_area(X[frag_vertices(keep)])
        new_area = convex_area(X[frag_vertices([f for f in faces if f not in keep])])
        if not (keep_area > 0 and new_area > 0):
            raise DegenerateGeometryError(2, j + 1, "fragment with zero area")
        t = keep_area / (keep_area + new_area)
    else:
        t = 0.5
        warnings.append(f"{p}-cell {j + 1}: size split evenly (no cheap measure for p={p})")
    return SplitDescriptor(desc.p, desc.target, desc.keep, desc.new, desc.new_cell_boundary, t, size)


def split_complex(
    k: CellComplex, plane: Hyperplane, eps: float = DEFAULT_EPS
) -> tuple[CellComplex, SubdivisionMap, Classification]:
    """Split every cell of ``k`` that straddles ``plane``.

    Returns the refined complex, the chain map from ``k`` to it, and the
    classification of every output cell.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    _require_coords(k)
    report = validate(k)
    if not report.ok:
        raise InvalidComplexError(report)
    d = k.dim
    c: list[np.ndarray] = [classify_vertices(k, plane, eps)] + [None] * d  # type: ignore[list-item]
    a: list[np.ndarray | None] = [None] * (d + 1)
    trace = [("c0", c[0].copy())]
    zeta = [SparseMatrix.identity(n) for n in k.counts]
    origin = [[(p, j + 1) for j in range(n)] for p, n in enumerate(k.counts)]
    steps: list[SplitDescriptor] = []
    warnings: list[str] = []

    for p in range(1, d + 1):
        cp, ap = propagate_classification(k, c[p - 1], p)
        a[p] = ap
        trace += [(f"c{p}", cp.copy()), (f"a{p}", ap.copy())]
        for j in np.flatnonzero(np.abs(cp) != ap).tolist():
            desc = _synthesize(k, p, j, c[p - 1], plane, warnings)
            refined = make(k, desc)
            log.debug("split %d-cell %d (t=%.6g)", p, j + 1, desc.t)
            n = k.counts[p]
            zp = SparseMatrix(
                (n + 1, n),
                list(range(n)) + [n],
                list(range(n)) + [j],
                [1.0] * j + [desc.t] + [1.0] * (n - j - 1) + [1.0 - desc.t],
            )
            zeta[p] = multiply(zp, zeta[p])
            m = k.counts[p - 1]
            zeta[p - 1] = multiply(SparseMatrix((m + 1, m), range(m), range(m), np.ones(m)), zeta[p - 1])
            origin[p].append(origin[p][j])
            origin[p - 1].append(origin[p][j])
            c[p - 1] = np.append(c[p - 1], 0)
            steps.append(desc)
            k = refined
        c[p] = np.sign(mat_vec(incidence_abs_transpose(k, p), c[p - 1])).astype(np.int64)
        trace.append((f"c{p}'", c[p].copy()))
        if p >= 2:
            # earlier levels gained separators during this pass
            trace.append((f"c{p - 1}'", c[p - 1].copy()))

    for w in warnings:
        log.warning(w)
    return k, SubdivisionMap(zeta, origin, steps, warnings), Classification(c, a, trace)


def iterated_split(
    k: CellComplex, planes: Sequence[Hyperplane], eps: float = DEFAULT_EPS
) -> tuple[CellComplex, SubdivisionMap]:
    """Split by each plane in turn, composing the chain maps."""
    total = SubdivisionMap(
        [SparseMatrix.identity(n) for n in k.counts],
        [[(p, j + 1) for j in range(n)] for p, n in enumerate(k.counts)],
    )
    for plane in planes:
        k, step, _ = split_complex(k, plane, eps)
        total.zeta = [multiply(z, zt) for z, zt in zip(step.zeta, total.zeta)]
        total.origin = [
            [total.origin[q][o - 1] for q, o in cells] for cells in step.origin
        ]
        total.steps += step.steps
        total.warnings += step.warnings
    return k, total
