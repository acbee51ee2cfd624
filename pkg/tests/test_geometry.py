"""
Tests for the feasible set D and its boundary queries
"""
import numpy as np
import pytest

from app.services.geometry import FeasibleSetD


@pytest.fixture
def D(sec25_cls):
    return FeasibleSetD(sec25_cls.restricted)


def test_payoff_pair_is_on_boundary(D):
    y = [0.25, 0.25, 0.0, 0.0]
    assert D.membership(y)
    assert D.boundary(y)
    assert D.active_set(y) == (2, 3)
    weights, residual = D.barycentric(y)
    assert residual < 1e-9
    np.testing.assert_allclose(weights, [1 / 3, 1 / 3, 1 / 6, 1 / 6], atol=1e-9)


def test_barycenter_is_interior(D):
    y = np.full(4, 0.125)
    assert D.membership(y)
    assert not D.boundary(y)
    assert D.max_min_weight(y) == pytest.approx(0.25)


@pytest.mark.parametrize("y", [[1.0, 1.0, 1.0, 1.0], [-0.1, 0.3, 0.0, 0.5], [0.5, 0.5, 0.5]])
def test_non_members(D, y):
    assert not D.membership(y)
    assert not D.boundary(y)


def test_lexicographic_start(D):
    np.testing.assert_allclose(D.lexicographic_start(), [0.0, 0.0, 0.0, 0.5], atol=1e-8)


def test_segment_exit(D):
    assert D.segment_exit(np.full(4, 0.125), 0) == pytest.approx(1 / 3)
    assert D.segment_exit([0.25, 0.25, 0.0, 0.0], 0) == 0.0


def test_cone_section_extent_vanishes_at_start(D):
    assert D.cone_section_extent([0.0, 0.0, 0.0, 0.5], (0, 1, 2)) == pytest.approx(0.0, abs=1e-9)
    assert D.cone_section_extent([0.0, 0.0, 0.0, 0.5], ()) == 0.0


def test_faces(D, sec25_cls):
    assert D.in_face(sec25_cls.restricted[:, 0], (0,))
    assert not D.in_face([0.25, 0.25, 0.0, 0.0], (0, 1))


def test_sampled_points_are_on_boundary(D):
    points = D.sample_boundary(10, seed=1)
    assert len(points) == 10
    assert all(D.boundary(p) for p in points)
    again = D.sample_boundary(10, seed=1)
    np.testing.assert_array_equal(np.array(points), np.array(again))


def test_empty_set():
    D = FeasibleSetD(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert D.is_empty()
    with pytest.raises(ValueError):
        D.lexicographic_start()


def test_non_square_matrix_rejected():
    with pytest.raises(ValueError):
        FeasibleSetD(np.zeros((2, 3)))


def test_snap(D):
    np.testing.assert_array_equal(D.snap([1e-12, 0.5, -1e-11, 0.25]), [0.0, 0.5, 0.0, 0.25])


CYCLIC = np.array([[0.0, 0.881, -0.408], [-0.589, 0.0, 0.669], [0.829, -0.277, 0.0]])


def test_lexicographic_start_of_cyclic_game_is_on_boundary():
    D = FeasibleSetD(CYCLIC)
    start = D.lexicographic_start()
    assert start[0] == 0.0 and start[1] == 0.0
    assert start[2] == pytest.approx(0.31301731644363495, abs=1e-6)
    assert D.in_hull(start)
    assert D.boundary(start)


def test_snap_projects_points_just_outside_the_hull():
    D = FeasibleSetD(CYCLIC)
    vertex = D.lexicographic_start()
    nudged = vertex + np.array([0.0, 0.0, 3e-8])
    assert not D.in_hull(nudged)
    snapped = D.snap(nudged)
    assert D.boundary(snapped)
    assert snapped[0] == 0.0 and snapped[1] == 0.0
    np.testing.assert_allclose(snapped, vertex, atol=1e-7)


def test_snap_leaves_far_points_alone():
    D = FeasibleSetD(CYCLIC)
    np.testing.assert_array_equal(D.snap([1.0, 1.0, 1.0]), [1.0, 1.0, 1.0])


@pytest.mark.parametrize("seed", range(5))
def test_snapped_boundary_samples_stay_in_d(seed):
    D = FeasibleSetD(CYCLIC)
    for point in D.sample_boundary(5, seed=seed):
        assert D.boundary(D.snap(point + 1e-9))
