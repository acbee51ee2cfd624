"""
Tests for simplex-form LCP solving, Q-matrix testing and the sign/inverse checks
"""
import numpy as np
import pytest

from app.core.exceptions import PreconditionError, SingularMatrixError
from app.models.lcp import QMatrixMethod, QMatrixVerdictType
from app.services.geometry import FeasibleSetD
from app.services.lcp_solver import LcpSolver, all_supports


@pytest.fixture
def solver():
    return LcpSolver()


def test_all_supports_lexicographic():
    assert all_supports(2) == [(), (0,), (0, 1), (1,)]
    assert all_supports(2, include_empty=False) == [(0,), (0, 1), (1,)]


def test_nonnegative_q_has_trivial_solution(solver, ex1_pos):
    solution = solver.solve_lcp(ex1_pos, [0.5, 0.0, 1.0])
    assert solution is not None
    assert solution.support() == ()
    assert solution.z0 == pytest.approx(1.0)
    assert solution.is_valid(ex1_pos, [0.5, 0.0, 1.0])


def test_example_instance_is_solvable(solver, ex1_pos):
    q = np.array([0.0, 0.0, -1.0])
    solution = solver.solve_lcp(ex1_pos, q)
    assert solution is not None
    assert solution.is_valid(ex1_pos, q)
    assert np.all(solution.w * solution.z[1:] <= 1e-12)


def test_standard_form_requires_positive_z0(solver, ex1_pos):
    q = np.array([0.0, 0.0, -1.0])
    solution = solver.solve_lcp(ex1_pos, q, standard_form=True)
    assert solution is not None
    assert solution.z0 > 0.0


def test_exact_mode_matches_float(solver, ex1_pos):
    q = [0.0, 0.0, -1.0]
    exact = solver.solve_lcp(ex1_pos, q, exact=True)
    floating = solver.solve_lcp(ex1_pos, q)
    assert exact is not None
    np.testing.assert_allclose(exact.z, floating.z, atol=1e-9)
    assert all(hasattr(v, "p") for v in exact.exact_z)


def test_zero_lcp_of_sec25_is_trivial(solver, sec25_cls):
    assert solver.nontrivial_zero_solution(sec25_cls.restricted) is None


def test_zero_lcp_support_is_lexicographic(solver, zero_lcp_game, classifier):
    cls = classifier.classify_players(zero_lcp_game)
    solution = solver.nontrivial_zero_solution(cls.restricted)
    assert solution is not None
    assert solution.support() == (0, 1)
    np.testing.assert_allclose(solution.z, [0.0, 0.5, 0.5, 0.0], atol=1e-9)
    assert solution.is_valid(cls.restricted, np.zeros(3))


def test_sec25_block_lcp_has_unique_nontrivial_solution(solver, sec25_cls):
    y = np.array([0.0, 0.0, 0.0, 0.5])
    solution = solver.nontrivial_solution(sec25_cls.restricted, y)
    assert solution is not None
    np.testing.assert_allclose(solution.z, np.array([1, 1, 1, 0, 4]) / 7.0, atol=1e-9)
    np.testing.assert_allclose(solution.w, [0.0, 0.0, 0.5, 0.0], atol=1e-9)


def test_q_test_certifies_positive_determinant(solver, ex1_pos):
    verdict = solver.q_matrix_test(ex1_pos, samples=100, seed=0)
    assert verdict.verdict == QMatrixVerdictType.Q_CERTIFIED
    assert verdict.method == QMatrixMethod.DETERMINANT_3X3
    assert verdict.determinant == pytest.approx(7.0)


def test_q_test_finds_witness_at_zero_determinant(solver, ex1_zero):
    verdict = solver.q_matrix_test(ex1_zero, samples=10_000, seed=0)
    assert verdict.verdict == QMatrixVerdictType.NOT_Q_WITH_WITNESS
    assert verdict.determinant == pytest.approx(0.0)
    assert verdict.witness_q is not None
    assert solver.solve_lcp(ex1_zero, verdict.witness_q, standard_form=True) is None


def test_q_test_samples_sec25(solver, sec25_cls):
    verdict = solver.q_matrix_test(sec25_cls.restricted, samples=2_000, seed=3)
    assert verdict.method == QMatrixMethod.CONE_SAMPLING
    if verdict.verdict == QMatrixVerdictType.NOT_Q_WITH_WITNESS:
        assert solver.solve_lcp(sec25_cls.restricted, verdict.witness_q, standard_form=True) is None
    else:
        assert verdict.witness_q is None
    assert verdict.is_sign_m is True
    assert verdict.inverse_positive is True


def test_q_test_is_reproducible(solver):
    R = np.array([[0.0, -1.0], [-1.0, 0.0]])
    first = solver.q_matrix_test(R, samples=500, seed=11)
    second = solver.q_matrix_test(R, samples=500, seed=11)
    assert first == second
    assert first.verdict == QMatrixVerdictType.NOT_Q_WITH_WITNESS


def test_q_test_rejects_zero_samples(solver, ex1_pos):
    with pytest.raises(PreconditionError):
        solver.q_matrix_test(ex1_pos, samples=0)


def test_sign_m_and_inverse_positive(solver, sec25_cls, ex1_pos):
    assert solver.is_sign_m(sec25_cls.restricted)
    assert solver.inverse_positive(sec25_cls.restricted)
    assert solver.inverse_positive(sec25_cls.restricted, exact=True)
    assert not solver.is_sign_m(np.array([[0.0, 1.0], [1.0, 0.0]]) * -1.0)
    assert solver.inverse_positive(ex1_pos)
    assert not solver.inverse_positive(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_sign_m_needs_zero_diagonal(solver):
    with pytest.raises(PreconditionError):
        solver.is_sign_m(np.eye(2))


def test_singular_inverse(solver):
    with pytest.raises(SingularMatrixError):
        solver.inverse(np.zeros((2, 2)))
    with pytest.raises(SingularMatrixError):
        solver.inverse(np.zeros((2, 2)), exact=True)


def test_standard_form_solvable_vectorized(solver):
    R = np.array([[0.0, -1.0], [-1.0, 0.0]])
    directions = np.array([[1.0, 1.0], [-1.0, -1.0]])
    np.testing.assert_array_equal(solver.standard_form_solvable(R, directions), [True, False])


@pytest.mark.parametrize("name", ["sec25", "ex1_pos"])
def test_hull_points_land_on_boundary(solver, sec25_cls, ex1_pos, name):
    R = sec25_cls.restricted if name == "sec25" else ex1_pos
    D = FeasibleSetD(R)
    rng = np.random.default_rng(7)
    for mu in rng.dirichlet(np.ones(len(R)), size=100):
        q = R @ mu
        solution = solver.solve_lcp(R, q)
        assert solution is not None
        np.testing.assert_allclose(solution.w, solution.z0 * q + R @ solution.z[1:], atol=1e-9)
        assert D.membership(solution.w)
        if np.min(q) < 0.0:
            assert solution.z0 < 1.0
            assert D.boundary(solution.w)
        else:
            np.testing.assert_allclose(solution.w, q, atol=1e-12)
