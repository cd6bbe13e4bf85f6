import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellchain import load_fixture
from cellchain.complex import validate
from cellchain.euler_ops import (
    InvalidDescriptorError,
    MakeRejected,
    SplitDescriptor,
    add_column,
    add_row,
    column_operator,
    derive_descriptor,
    hasse_make,
    make,
    make_operators,
    make_recorded,
    new_cell_sign,
    row_operator,
    split_row_column,
)
from cellchain.hasse import assemble_hasse
from cellchain.sparse import ShapeError, SparseMatrix, max_abs_diff, multiply

from .oracles import random_descriptor

R2 = np.sqrt(2.0)

# cut the hypotenuse at its midpoint
CUT_EDGE = SplitDescriptor(0, 1, ((1, -1),), ((3, 1),), t=0.5, new_vertex=(0.5, 0.5))
# join the new vertex to the right-angle corner
CUT_FACE = SplitDescriptor(
    1, 1, ((1, -1), (2, 1)), ((3, 1), (4, -1)), ((2, -1), (4, 1)), t=0.5, new_cell_size=R2 / 2
)

D0_AFTER_EDGE = [[-R2, 0, 0, R2], [-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, R2, -R2]]
D1_AFTER_EDGE = [[-R2, 2, 2, -R2]]
D0_AFTER_FACE = D0_AFTER_EDGE + [[0, -R2, 0, R2]]
D1_AFTER_FACE = [[-2 * R2, 4, 0, 0, 2 * R2], [0, 0, 4, -2 * R2, -2 * R2]]


def _close(m, want, tol=1e-12):
    return np.abs(m.to_dense() - np.asarray(want, dtype=float)).max() <= tol


def test_cut_edge_matrices(triangle):
    k1 = make(triangle, CUT_EDGE)
    assert k1.counts == (4, 4, 1)
    assert _close(k1.coboundary_matrix(0), D0_AFTER_EDGE)
    assert _close(k1.coboundary_matrix(1), D1_AFTER_EDGE)
    assert k1.coords[-1].tolist() == [0.5, 0.5]
    assert k1.sizes[1].tolist() == pytest.approx([R2 / 2, 1, 1, R2 / 2], abs=1e-15)


def test_cut_face_matrices(triangle):
    k2 = make(make(triangle, CUT_EDGE), CUT_FACE)
    assert k2.counts == (4, 5, 2)
    assert _close(k2.coboundary_matrix(0), D0_AFTER_FACE)
    assert _close(k2.coboundary_matrix(1), D1_AFTER_FACE)
    assert k2.sizes[2].tolist() == [0.25, 0.25]


def test_operator_factors_reproduce_cut_edge(triangle):
    ops = make_operators(triangle, CUT_EDGE)
    assert ops.sign == 1
    d0 = split_row_column(triangle.coboundary_matrix(0), ops.S, ops.T)
    assert _close(d0, D0_AFTER_EDGE)
    d1 = add_column(triangle.coboundary_matrix(1), ops.column_coeffs, ops.column_scale)
    assert _close(d1, D1_AFTER_EDGE)
    # S_i are k+1 x k and T_i are k x k+1
    assert all(s.shape == (4, 3) for s in ops.S)
    assert all(t.shape == (3, 4) for t in ops.T)


def test_operator_factors_reproduce_cut_face(triangle):
    k1 = make(triangle, CUT_EDGE)
    ops = make_operators(k1, CUT_FACE)
    assert _close(add_row(k1.coboundary_matrix(0), ops.row_coeffs), D0_AFTER_FACE)
    assert _close(split_row_column(k1.coboundary_matrix(1), ops.S, ops.T), D1_AFTER_FACE)


def test_derived_descriptors_agree_with_hand_written(triangle):
    d = derive_descriptor(triangle, 0, 1, [1], t=0.5, new_vertex=(0.5, 0.5))
    assert (d.keep, d.new) == (CUT_EDGE.keep, CUT_EDGE.new)
    k1 = make(triangle, d)
    d = derive_descriptor(k1, 1, 1, [1, 2], t=0.5, new_cell_size=R2 / 2)
    assert d.new_cell_boundary == CUT_FACE.new_cell_boundary
    assert make(k1, d) == make(k1, CUT_FACE)


def test_new_cell_sign(triangle):
    assert new_cell_sign(triangle, CUT_EDGE) == 1
    flipped = SplitDescriptor(0, 1, ((3, 1),), ((1, -1),))
    assert new_cell_sign(triangle, flipped) == -1
    k1 = make(triangle, CUT_EDGE)
    reversed_edge = SplitDescriptor(1, 1, CUT_FACE.keep, CUT_FACE.new, ((2, 1), (4, -1)))
    assert new_cell_sign(k1, reversed_edge) == -1
    assert validate(make(k1, reversed_edge)).ok


def test_elementary_operators():
    d = SparseMatrix.from_dense([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(column_operator(2, [1.0, 0.0]).to_dense(), [[1, 0, 1], [0, 1, 0]])
    assert np.array_equal(row_operator(2, [0.0, 2.0]).to_dense(), [[1, 0], [0, 1], [0, 2]])
    assert np.array_equal(add_column(d, [1.0, -1.0]).to_dense(), [[1, 2, -1], [3, 4, -1]])
    assert np.array_equal(add_row(d, [1.0, 1.0]).to_dense(), [[1, 2], [3, 4], [4, 6]])
    with pytest.raises(ShapeError):
        add_column(d, [1.0])
    with pytest.raises(ShapeError):
        split_row_column(d, [], [])


@pytest.mark.parametrize(
    "desc, match",
    [
        (SplitDescriptor(2, 1, (), ()), "out of range"),
        (SplitDescriptor(0, 9, ((1, -1),), ((3, 1),)), "no 1-cell"),
        (SplitDescriptor(0, 1, ((1, -1),), ((3, 1),), t=1.0), "t=1.0"),
        (SplitDescriptor(0, 1, ((1, -1),), ((2, 1),)), "does not match"),
        (SplitDescriptor(0, 1, ((1, 1),), ((3, 1),)), "sign of 0-cell 1"),
        (SplitDescriptor(0, 1, ((1, -1), (1, -1)), ((3, 1),)), "both sides"),
        (SplitDescriptor(0, 1, ((1, -1),), ((3, 1),), ((1, 1),)), "no boundary"),
        (SplitDescriptor(0, 1, ((1, -1),), ((3, 1),), new_vertex=(0.0,)), "coordinates"),
    ],
)
def test_descriptor_errors(triangle, desc, match):
    with pytest.raises(InvalidDescriptorError, match=match):
        make(triangle, desc)


def test_inconsistent_separator_is_rejected(triangle):
    k1 = make(triangle, CUT_EDGE)
    wrong = SplitDescriptor(1, 1, CUT_FACE.keep, CUT_FACE.new, ((1, -1), (4, 1)))
    with pytest.raises(MakeRejected) as info:
        make(k1, wrong)
    assert not info.value.report.ok
    # the input complex is untouched
    assert k1 == make(triangle, CUT_EDGE)


def test_make_record_undo(triangle):
    rec = make_recorded(triangle, CUT_EDGE)
    assert rec.undo() == triangle
    assert rec.after.counts == (4, 4, 1)


def test_split_of_a_tetrahedron(two_tets):
    # separate the first tetrahedron along the triangle through vertex 1, 4
    # and the midpoint of edge 5 (2 -> 3), after splitting that edge and the
    # two faces containing it
    k = make(two_tets, derive_descriptor(two_tets, 0, 5, [2]))
    new_v = k.counts[0]
    k = make(k, derive_descriptor(k, 1, 2, [2, 3]))
    k = make(k, derive_descriptor(k, 1, 4, [4, 10]))
    k = make(k, derive_descriptor(k, 1, 6, [8, 9]))
    assert k.counts == (6, 13, 10, 2)
    faces_tet1 = sorted(i + 1 for i in k.faces(3, 0))
    keep = [f for f in faces_tet1 if new_v in _vertex_set(k, f) and 2 in _vertex_set(k, f)]
    keep += [f for f in faces_tet1 if f not in keep and 3 not in _vertex_set(k, f)]
    k = make(k, derive_descriptor(k, 2, 1, sorted(set(keep))))
    assert k.counts == (6, 13, 11, 3)
    assert validate(k).ok
    assert k.euler_characteristic() == 1


def _vertex_set(k, face):
    return {v + 1 for e in k.faces(2, face - 1) for v in k.faces(1, e)}


@pytest.mark.parametrize("name", ["triangle.cx", "two_quads.cx", "two_tets.cx", "cube_surface.cx"])
def test_hasse_make_single_steps(name):
    k = load_fixture(name)
    rng = np.random.default_rng(7)
    for _ in range(5):
        desc, refined = random_descriptor(k, rng)
        h = assemble_hasse(k)
        h2, k2 = hasse_make(h, k, desc)
        assert k2 == refined
        assert max_abs_diff(h2.matrix, assemble_hasse(refined).matrix) <= 1e-12
        assert h2.shape == (h.shape[0] + 1, h.shape[1] + 1)
        assert h2.euler_characteristic == h.euler_characteristic
        k = refined


def test_hasse_make_rejects_foreign_matrix(triangle, two_quads):
    with pytest.raises(ShapeError):
        hasse_make(assemble_hasse(two_quads), triangle, CUT_EDGE)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["triangle.cx", "two_quads.cx", "pentagon_fan.cx", "two_tets.cx"]), st.integers(0, 2**32 - 1))
def test_random_make_sequences_stay_chain_complexes(name, seed):
    k = load_fixture(name)
    chi = k.euler_characteristic()
    rng = np.random.default_rng(seed)
    for _ in range(4):
        step = random_descriptor(k, rng)
        assert step is not None
        desc, refined = step
        assert refined.euler_characteristic() == chi
        assert sum(refined.counts) == sum(k.counts) + 2
        for p in range(1, refined.dim):
            assert multiply(refined.boundary_matrix(p), refined.boundary_matrix(p + 1)).max_abs() <= 1e-10
            assert multiply(refined.coboundary_matrix(p), refined.coboundary_matrix(p - 1)).max_abs() <= 1e-10
        # the split cell's two fragments carry its size
        q = desc.p + 1
        total = refined.sizes[q][desc.target - 1] + refined.sizes[q][-1]
        assert total == pytest.approx(k.sizes[q][desc.target - 1], rel=1e-12)
        k = refined
