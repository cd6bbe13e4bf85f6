import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cellchain import load_fixture
from cellchain.complex import CellComplex, chain_map_check, validate
from cellchain.euler_ops import make
from cellchain.sparse import SparseMatrix, max_abs_diff, multiply
from cellchain.split import (
    DegenerateGeometryError,
    Hyperplane,
    NonConvexCellError,
    SplitError,
    classify_vertices,
    convex_area,
    iterated_split,
    propagate_classification,
    split_complex,
)

from .test_euler_ops import CUT_EDGE, CUT_FACE

DIAGONAL = Hyperplane.parse("1,1,1")


def _square(side=1.0):
    b0 = SparseMatrix.from_dense(
        [[-1, 0, 0, -1], [1, -1, 0, 0], [0, 1, -1, 0], [0, 0, 1, 1]]
    )
    b1 = SparseMatrix.from_dense([[1], [1], [1], [-1]])
    coords = side * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    return CellComplex((4, 4, 1), [b0, b1], [np.ones(4), np.full(4, side), [side * side]], coords)


def _solid_cube():
    surf = load_fixture("cube_surface.cx")
    b2 = SparseMatrix.from_dense(np.ones((6, 1)))
    return CellComplex((8, 12, 6, 1), list(surf.incidence) + [b2], coords=surf.coords)


def _l_shape():
    pts = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
    n = len(pts)
    b0 = np.zeros((n, n))
    for j in range(n):
        b0[j, j], b0[(j + 1) % n, j] = -1, 1
    lengths = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return CellComplex(
        (n, n, 1),
        [SparseMatrix.from_dense(b0), SparseMatrix.from_dense(np.ones((n, 1)))],
        [np.ones(n), lengths, [3.0]],
        pts,
    )


def _no_straddlers(k, plane, eps=1e-8):
    c = classify_vertices(k, plane, eps)
    for p in range(1, k.dim + 1):
        cp, ap = propagate_classification(k, c, p)
        if np.any(np.abs(cp) != ap):
            return False
        c = np.sign(cp)
    return True


def _origin_sizes_conserved(k, out, zmap, tol=1e-9):
    for p in range(1, k.dim + 1):
        totals = np.zeros(k.counts[p])
        for j, (q, o) in enumerate(zmap.origin[p]):
            if q == p:
                totals[o - 1] += out.sizes[p][j]
        if np.abs(totals - k.sizes[p]).max(initial=0.0) > tol * max(1.0, k.sizes[p].max(initial=1.0)):
            return False
    return True


def test_hyperplane_parse():
    h = Hyperplane.parse("1, 1, 1")
    assert h.normal == (1.0, 1.0) and h.offset == 1.0
    assert h.row.tolist() == [1.0, 1.0, -1.0]
    with pytest.raises(ValueError):
        Hyperplane.parse("1")
    with pytest.raises(ValueError):
        Hyperplane.parse("0,0,1")
    with pytest.raises(ValueError):
        Hyperplane.parse("a,b")


def test_classify_vertices(triangle):
    assert classify_vertices(triangle, DIAGONAL, 1e-8).tolist() == [-1, 0, 1]
    far = Hyperplane((1.0, 0.0), -10.0)
    assert classify_vertices(triangle, far).tolist() == [1, 1, 1]
    with pytest.raises(ValueError):
        classify_vertices(triangle, Hyperplane((1.0, 0.0, 0.0), 0.0))
    with pytest.raises(SplitError):
        classify_vertices(load_fixture("two_tets.cx"), Hyperplane((1.0,), 0.0))


def test_propagate_classification(triangle):
    c, a = propagate_classification(triangle, [-1, 0, 1], 1)
    assert c.tolist() == [0, -1, 1] and a.tolist() == [2, 1, 1]
    c, a = propagate_classification(triangle, [0, 0, 0], 1)
    assert not c.any() and not a.any()
    with pytest.raises(IndexError):
        propagate_classification(triangle, [0, 0, 0], 3)
    with pytest.raises(ValueError):
        propagate_classification(triangle, [0, 0], 1)


def test_triangle_split_by_diagonal(triangle):
    out, zmap, cls = split_complex(triangle, DIAGONAL, 1e-8)
    trace = {}
    for name, vec in cls.trace:
        trace.setdefault(name, vec.tolist())
    assert trace["c0"] == [-1, 0, 1]
    assert trace["c1"] == [0, -1, 1]
    assert trace["a1"] == [2, 1, 1]
    assert trace["c2"] == [0]
    assert trace["a2"] == [4]
    assert cls.c[2].tolist() == [-1, 1]
    assert out.counts == (4, 5, 2)
    assert len(zmap.steps) == 2 and not zmap.warnings


def test_diagonal_split_equals_hand_written_make_steps(triangle):
    out, _, _ = split_complex(triangle, DIAGONAL)
    by_hand = make(make(triangle, CUT_EDGE), CUT_FACE)
    for p in range(out.dim):
        assert out.B(p) == by_hand.B(p)
        assert max_abs_diff(out.coboundary_matrix(p), by_hand.coboundary_matrix(p)) <= 1e-12
    assert np.allclose(out.coords, by_hand.coords, atol=1e-15)


def test_euler_characteristic_constant_through_each_step(triangle):
    out, zmap, _ = split_complex(triangle, DIAGONAL)
    k = triangle
    for desc in zmap.steps:
        k = make(k, desc)
        assert k.euler_characteristic() == 1
    assert k == out


def test_plane_missing_the_complex_is_identity(two_quads):
    out, zmap, cls = split_complex(two_quads, Hyperplane((0.0, 1.0), 10.0))
    assert out == two_quads
    assert all(z == SparseMatrix.identity(n) for z, n in zip(zmap.zeta, two_quads.counts))
    assert not zmap.steps


def test_plane_touching_a_vertex_splits_nothing(triangle):
    out, _, cls = split_complex(triangle, Hyperplane((1.0, 0.0), 0.0))
    assert out == triangle
    assert cls.c[0].tolist() == [0, 1, 1]


def test_plane_along_an_edge_splits_nothing(two_quads):
    out, _, _ = split_complex(two_quads, Hyperplane((0.0, 1.0), 1.0))
    assert out == two_quads


def test_zeta_is_a_chain_map(triangle, two_quads):
    for k, plane in [(triangle, DIAGONAL), (two_quads, Hyperplane((1.0, 1.0), 2.5))]:
        out, zmap, _ = split_complex(k, plane)
        ok, worst = chain_map_check(zmap.zeta, k, out)
        assert ok, worst


def test_two_parallel_planes_cut_a_square_in_three():
    sq = _square()
    planes = [Hyperplane((1.0, 0.0), 1 / 3), Hyperplane((1.0, 0.0), 2 / 3)]
    out, zmap = iterated_split(sq, planes)
    assert out.counts == (8, 10, 3)
    assert zmap.zeta[2].shape == (3, 1) and zmap.zeta[2].nnz == 3
    assert np.allclose(zmap.zeta[2].to_dense().ravel(), [1 / 3, 1 / 3, 1 / 3])
    assert chain_map_check(zmap.zeta, sq, out)[0]
    assert sorted(out.sizes[2]) == pytest.approx([1 / 3] * 3)


def test_iterated_split_composes_step_maps(two_quads):
    planes = [Hyperplane((1.0, 0.0), 1.5), Hyperplane((0.0, 1.0), 2.0), Hyperplane((1.0, -1.0), 0.3)]
    out, total = iterated_split(two_quads, planes)
    k, product = two_quads, [SparseMatrix.identity(n) for n in two_quads.counts]
    for plane in planes:
        k, step, _ = split_complex(k, plane)
        product = [multiply(z, acc) for z, acc in zip(step.zeta, product)]
    assert k == out
    for a, b in zip(total.zeta, product):
        assert max_abs_diff(a, b) <= 1e-12
    assert chain_map_check(total.zeta, two_quads, out)[0]
    assert _origin_sizes_conserved(two_quads, out, total)
    assert _no_straddlers(out, planes[-1])


def test_empty_plane_sequence_is_identity(triangle):
    out, zmap = iterated_split(triangle, [])
    assert out == triangle
    assert all(z == SparseMatrix.identity(n) for z, n in zip(zmap.zeta, triangle.counts))


def test_sizes_are_conserved_per_origin(triangle):
    out, zmap, _ = split_complex(triangle, Hyperplane((1.0, -2.0), 0.1))
    assert _origin_sizes_conserved(triangle, out, zmap)


def test_separator_origin_is_the_split_cell(triangle):
    out, zmap, _ = split_complex(triangle, DIAGONAL)
    # the new vertex came from edge 1, the chord from the face
    assert zmap.origin[0][-1] == (1, 1)
    assert zmap.origin[1][-1] == (2, 1)
    assert zmap.origin[1][:3] == [(1, 1), (1, 2), (1, 3)]


def test_non_convex_straddling_cell_is_rejected():
    with pytest.raises(NonConvexCellError) as info:
        split_complex(_l_shape(), Hyperplane((1.0, 0.0), 1.5))
    assert info.value.cell == (2, 1)


def test_non_convex_cell_off_the_plane_is_fine():
    k = _l_shape()
    out, _, _ = split_complex(k, Hyperplane((1.0, 0.0), 5.0))
    assert out == k


def test_errors(triangle):
    with pytest.raises(ValueError):
        split_complex(triangle, DIAGONAL, eps=0.0)
    with pytest.raises(SplitError):
        split_complex(load_fixture("two_tets.cx"), Hyperplane((1.0, 0.0, 0.0), 0.5))


def test_solid_cube_split_warns_about_even_volume_share():
    cube = _solid_cube()
    assert validate(cube).ok
    out, zmap, cls = split_complex(cube, Hyperplane((1.0, 0.0, 0.0), 0.25))
    assert out.counts == (12, 20, 11, 2)
    assert out.euler_characteristic() == 1
    assert chain_map_check(zmap.zeta, cube, out)[0]
    assert any("evenly" in w for w in zmap.warnings)
    # the separating square has unit area; the split faces get 1/4 and 3/4
    assert out.sizes[2][-1] == pytest.approx(1.0)
    assert sorted(out.sizes[3]) == [0.5, 0.5]
    assert cls.c[3].tolist() == [-1, 1]


def test_degenerate_polygon_is_reported():
    sq = _square()
    flat = CellComplex(sq.counts, sq.incidence, sq.sizes, [[0, 0], [1, 0], [2, 0], [3, 0]])
    with pytest.raises(DegenerateGeometryError):
        split_complex(flat, Hyperplane((1.0, 0.0), 1.5))


def test_convex_area():
    assert convex_area([[0, 0], [1, 0], [1, 1], [0, 1]]) == pytest.approx(1.0)
    assert convex_area([[0, 0, 0], [0, 2, 0], [0, 0, 2]]) == pytest.approx(2.0)
    assert convex_area([[0, 0], [1, 1]]) == 0.0


def test_determinism(two_quads):
    plane = Hyperplane((1.0, 2.0), 3.0)
    a = split_complex(two_quads, plane)
    b = split_complex(two_quads, plane)
    assert a[0] == b[0]
    assert all(x == y for x, y in zip(a[1].zeta, b[1].zeta))


planes = st.tuples(
    st.floats(-1, 1, allow_nan=False), st.floats(-1, 1, allow_nan=False), st.floats(-2, 2, allow_nan=False)
)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["triangle.cx", "two_quads.cx", "pentagon_fan.cx"]), planes)
def test_random_planes_in_the_plane(name, hp):
    assume(abs(hp[0]) + abs(hp[1]) > 1e-3)
    k = load_fixture(name)
    plane = Hyperplane(hp[:2], hp[2] * (4 if name == "two_quads.cx" else 1))
    vals = np.abs(plane.evaluate(k.coords))
    assume(not np.any((vals > 1e-8) & (vals < 1e-6)))
    out, zmap, _ = split_complex(k, plane)
    # the fan carries unit sizes, which no geometric split can conserve
    if name != "pentagon_fan.cx":
        assert _origin_sizes_conserved(k, out, zmap)
    assert validate(out).ok
    assert out.euler_characteristic() == k.euler_characteristic()
    assert chain_map_check(zmap.zeta, k, out)[0]
    assert _no_straddlers(out, plane)


@settings(max_examples=100, deadline=None)
@given(st.tuples(*(st.floats(-1, 1, allow_nan=False) for _ in range(3))), st.floats(-0.5, 2.0))
def test_random_planes_through_the_cube_surface(normal, offset):
    assume(np.linalg.norm(normal) > 1e-3)
    k = load_fixture("cube_surface.cx")
    plane = Hyperplane(normal, offset)
    vals = np.abs(plane.evaluate(k.coords))
    assume(not np.any((vals > 1e-8) & (vals < 1e-6)))
    out, zmap, _ = split_complex(k, plane)
    assert out.euler_characteristic() == 2
    assert chain_map_check(zmap.zeta, k, out)[0]
    assert _no_straddlers(out, plane)
    assert _origin_sizes_conserved(k, out, zmap)
