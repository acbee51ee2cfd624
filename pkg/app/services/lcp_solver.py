"""
Simplex-form linear complementarity problems: complementary-cone enumeration,
Q-matrix testing and the sign/inverse tests used by the M-matrix path
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain, combinations
from typing import Iterable, List, Optional, Tuple

import numpy as np
import sympy
from scipy.optimize import linprog

from app.core.config import settings
from app.core.exceptions import PreconditionError, SingularMatrixError
from app.models.lcp import (
    LcpSolutionReport,
    QMatrixMethod,
    QMatrixVerdict,
    QMatrixVerdictType,
)

logger = logging.getLogger(__name__)

Support = Tuple[int, ...]


def all_supports(n: int, include_empty: bool = True) -> List[Support]:
    """Every index set of [n] as a sorted tuple, in lexicographic order"""
    sets = chain.from_iterable(combinations(range(n), k) for k in range(n + 1))
    ordered = sorted(sets)
    return ordered if include_empty else [s for s in ordered if s]


def to_rational(value) -> sympy.Rational:
    if isinstance(value, (int, Fraction, sympy.Rational)):
        return sympy.Rational(value)
    return sympy.Rational(repr(float(value))).limit_denominator(10**9)


def rational_matrix(matrix) -> sympy.Matrix:
    rows = np.asarray(matrix, dtype=object)
    return sympy.Matrix([[to_rational(v) for v in row] for row in rows])


@dataclass(frozen=True, eq=False)
class LcpSolution:
    """
    w = z_0 q + Σ z_i r^i with w ≥ 0, z a distribution over {0, ..., n}
    and z_i w_i = 0. Index i of `w` matches index i + 1 of `z`.
    """
    w: np.ndarray
    z: np.ndarray
    exact_w: Optional[Tuple[sympy.Rational, ...]] = None
    exact_z: Optional[Tuple[sympy.Rational, ...]] = None

    @property
    def z0(self) -> float:
        return float(self.z[0])

    @property
    def n(self) -> int:
        return len(self.w)

    def support(self, tolerance: Optional[float] = None) -> Support:
        tol = settings.SUPPORT_TOLERANCE if tolerance is None else tolerance
        return tuple(i for i in range(self.n) if self.z[i + 1] > tol)

    def residual(self, matrix: np.ndarray, q: np.ndarray) -> float:
        return float(np.max(np.abs(self.w - self.z[0] * q - matrix @ self.z[1:]), initial=0.0))

    def is_valid(self, matrix, q, tolerance: Optional[float] = None) -> bool:
        tol = settings.TOLERANCE if tolerance is None else tolerance
        matrix = np.asarray(matrix, dtype=float)
        q = np.asarray(q, dtype=float)
        complementary = all(
            self.z[i + 1] <= settings.SUPPORT_TOLERANCE or abs(self.w[i]) <= tol
            for i in range(self.n)
        )
        return (
            self.residual(matrix, q) <= tol
            and complementary
            and bool(np.all(self.w >= -tol))
            and bool(np.all(self.z >= -tol))
            and abs(float(np.sum(self.z)) - 1.0) <= tol
        )

    def to_report(self) -> LcpSolutionReport:
        return LcpSolutionReport(
            w=[float(v) for v in self.w],
            z=[float(v) for v in self.z],
            support=[i + 1 for i in self.support()],
            exact_w=[str(v) for v in self.exact_w] if self.exact_w is not None else None,
            exact_z=[str(v) for v in self.exact_z] if self.exact_z is not None else None,
        )


class LcpSolver:
    """Exhaustive complementary-cone enumeration for small n"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance

    # ----------------------------------------------------------------- solving

    def solve_lcp(
        self,
        matrix,
        q,
        standard_form: bool = False,
        exact: bool = False,
    ) -> Optional[LcpSolution]:
        """
        Solve LCP(R, q) in simplex form

        Args:
            matrix: n x n matrix R whose columns are r^1..r^n
            q: vector of length n
            standard_form: only accept solutions with z_0 > 0
            exact: rational arithmetic via sympy

        Returns:
            The solution with lexicographically smallest support (then smallest
            z_0), or None when no complementary cone contains q
        """
        if exact:
            return self._solve_exact(matrix, q, standard_form)
        R = np.asarray(matrix, dtype=float)
        q = np.asarray(q, dtype=float)
        solution, singular, total = self._enumerate(R, q, standard_form)
        if solution is None and singular == total:
            logger.warning("All complementary bases singular; retrying with a perturbed diagonal")
            perturbed = R + settings.SINGULAR_PERTURBATION * np.eye(len(q))
            solution, _, _ = self._enumerate(perturbed, q, standard_form)
        return solution

    def _enumerate(self, R: np.ndarray, q: np.ndarray, standard_form: bool):
        best = None
        best_key = None
        singular = 0
        supports = all_supports(len(q))
        for alpha in supports:
            outcome = self._solve_support(R, q, alpha)
            if outcome is None:
                continue
            if outcome == "singular":
                singular += 1
                continue
            if standard_form and outcome.z0 <= settings.SUPPORT_TOLERANCE:
                continue
            key = (outcome.support(), outcome.z0)
            if best_key is None or key < best_key:
                best, best_key = outcome, key
        return best, singular, len(supports)

    def _solve_support(self, R: np.ndarray, q: np.ndarray, alpha: Support):
        """Force w_α = 0 and z_i = 0 off α; unknowns are z_0 and z_α"""
        m = len(alpha)
        idx = list(alpha)
        A = np.zeros((m + 1, m + 1))
        b = np.zeros(m + 1)
        A[:m, 0] = q[idx]
        A[:m, 1:] = R[np.ix_(idx, idx)]
        A[m, :] = 1.0
        b[m] = 1.0
        if np.linalg.matrix_rank(A) < m + 1:
            return "singular"
        x = np.linalg.solve(A, b)
        tol = self.tolerance
        if np.any(x < -tol):
            return None
        x = np.clip(x, 0.0, None)
        x /= x.sum()
        w = x[0] * q + R[:, idx] @ x[1:]
        if np.any(w < -tol):
            return None
        w[idx] = 0.0
        w = np.clip(w, 0.0, None)
        z = np.zeros(len(q) + 1)
        z[0] = x[0]
        z[[i + 1 for i in idx]] = x[1:]
        return LcpSolution(w=w, z=z)

    def _solve_exact(self, matrix, q, standard_form: bool) -> Optional[LcpSolution]:
        R = rational_matrix(matrix)
        qv = [to_rational(v) for v in q]
        n = len(qv)
        best = None
        best_key = None
        for alpha in all_supports(n):
            m = len(alpha)
            A = sympy.zeros(m + 1, m + 1)
            b = sympy.zeros(m + 1, 1)
            for r, i in enumerate(alpha):
                A[r, 0] = qv[i]
                for c, j in enumerate(alpha):
                    A[r, c + 1] = R[i, j]
            for c in range(m + 1):
                A[m, c] = 1
            b[m, 0] = 1
            if A.det() == 0:
                continue
            x = A.LUsolve(b)
            if any(v < 0 for v in x):
                continue
            z = [sympy.Integer(0)] * (n + 1)
            z[0] = x[0]
            for c, j in enumerate(alpha):
                z[j + 1] = x[c + 1]
            w = [z[0] * qv[k] + sum(R[k, j] * z[j + 1] for j in range(n)) for k in range(n)]
            if any(v < 0 for v in w):
                continue
            if standard_form and z[0] == 0:
                continue
            support = tuple(j for j in range(n) if z[j + 1] > 0)
            key = (support, z[0])
            if best_key is None or key < best_key:
                best_key = key
                best = LcpSolution(
                    w=np.array([float(v) for v in w]),
                    z=np.array([float(v) for v in z]),
                    exact_w=tuple(w),
                    exact_z=tuple(z),
                )
        return best

    def nontrivial_solution(
        self,
        matrix,
        q,
        supports: Optional[Iterable[Support]] = None,
        z0_bounds: Tuple[float, Optional[float]] = (0.0, None),
    ) -> Optional[LcpSolution]:
        """
        First support α (lexicographic) carrying a solution with z_i > 0 on all of α.

        Each α is a linear program maximizing min_{i∈α} z_i, so degenerate
        solution sets are handled without basis enumeration.
        """
        R = np.asarray(matrix, dtype=float)
        q = np.asarray(q, dtype=float)
        n = len(q)
        for alpha in supports if supports is not None else all_supports(n, include_empty=False):
            solution = self._max_min_support(R, q, alpha, z0_bounds)
            if solution is not None:
                return solution
        return None

    def nontrivial_zero_solution(self, matrix) -> Optional[LcpSolution]:
        """Solution of LCP(R, 0) with z_0 < 1, if any"""
        R = np.asarray(matrix, dtype=float)
        return self.nontrivial_solution(R, np.zeros(R.shape[0]))

    def _max_min_support(
        self,
        R: np.ndarray,
        q: np.ndarray,
        alpha: Support,
        z0_bounds: Tuple[float, Optional[float]] = (0.0, None),
    ) -> Optional[LcpSolution]:
        m = len(alpha)
        idx = list(alpha)
        others = [i for i in range(len(q)) if i not in alpha]
        width = m + 2
        c = np.zeros(width)
        c[-1] = -1.0

        A_eq = np.zeros((m + 1, width))
        b_eq = np.zeros(m + 1)
        A_eq[:m, 0] = q[idx]
        A_eq[:m, 1:m + 1] = R[np.ix_(idx, idx)]
        A_eq[m, :m + 1] = 1.0
        b_eq[m] = 1.0

        A_ub = np.zeros((len(others) + m, width))
        for r, i in enumerate(others):
            A_ub[r, 0] = -q[i]
            A_ub[r, 1:m + 1] = -R[i, idx]
        for k in range(m):
            A_ub[len(others) + k, 1 + k] = -1.0
            A_ub[len(others) + k, -1] = 1.0
        b_ub = np.zeros(len(others) + m)

        bounds = [z0_bounds] + [(0.0, None)] * m + [(0.0, 1.0)]
        result = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if result.status != 0 or -result.fun <= settings.SUPPORT_TOLERANCE:
            return None

        # HiGHS is feasible only to its own tolerance: project back onto the equalities
        A = A_eq[:, :m + 1]
        x = result.x[:m + 1]
        x = x + np.linalg.pinv(A) @ (b_eq - A @ x)
        if np.any(x < -self.tolerance):
            return None
        x = np.clip(x, 0.0, None)
        x /= x.sum()
        w = x[0] * q + R[:, idx] @ x[1:]
        if np.any(w < -self.tolerance):
            return None
        w[idx] = 0.0
        w = np.clip(w, 0.0, None)
        z = np.zeros(len(q) + 1)
        z[0] = x[0]
        z[[i + 1 for i in idx]] = x[1:]
        return LcpSolution(w=w, z=z)

    # ---------------------------------------------------------------- Q test

    def q_matrix_test(self, matrix, samples: Optional[int] = None, seed: Optional[int] = None) -> QMatrixVerdict:
        """
        Decide or estimate whether LCP(R, q) is solvable for every q

        Args:
            matrix: n x n matrix
            samples: number of random directions q on the unit sphere
            seed: RNG seed for the directions

        Returns:
            Verdict, witness q when one was found, and the method used
        """
        samples = settings.QTEST_SAMPLES if samples is None else samples
        seed = settings.QTEST_SEED if seed is None else seed
        if samples < 1:
            raise PreconditionError("samples must be at least 1")
        R = np.asarray(matrix, dtype=float)
        n = R.shape[0]
        sign_m = self.is_sign_m(R) if np.all(np.diag(R) == 0.0) else None
        inverse_ok = self._safe_inverse_positive(R)

        if self.cyclic_sign_pattern(R):
            det = float(rational_matrix(R).det())
            if det > 0:
                return QMatrixVerdict(
                    verdict=QMatrixVerdictType.Q_CERTIFIED,
                    method=QMatrixMethod.DETERMINANT_3X3,
                    determinant=det,
                    is_sign_m=sign_m,
                    inverse_positive=inverse_ok,
                )
            witness, used = self._search_witness(R, samples, seed, candidates=True)
            return QMatrixVerdict(
                verdict=QMatrixVerdictType.NOT_Q_WITH_WITNESS,
                witness_q=None if witness is None else [float(v) for v in witness],
                samples_used=used,
                method=QMatrixMethod.DETERMINANT_3X3,
                determinant=det,
                is_sign_m=sign_m,
                inverse_positive=inverse_ok,
            )

        witness, used = self._search_witness(R, samples, seed, candidates=False)
        return QMatrixVerdict(
            verdict=QMatrixVerdictType.PROBABLY_Q if witness is None else QMatrixVerdictType.NOT_Q_WITH_WITNESS,
            witness_q=None if witness is None else [float(v) for v in witness],
            samples_used=used,
            method=QMatrixMethod.CONE_SAMPLING,
            is_sign_m=sign_m,
            inverse_positive=inverse_ok,
        )

    def cyclic_sign_pattern(self, matrix) -> bool:
        """Zero diagonal with signs [[0,+,-],[-,0,+],[+,-,0]]"""
        R = np.asarray(matrix, dtype=float)
        if R.shape != (3, 3) or np.any(np.diag(R) != 0.0):
            return False
        return bool(
            R[0, 1] > 0 and R[0, 2] < 0
            and R[1, 0] < 0 and R[1, 2] > 0
            and R[2, 0] > 0 and R[2, 1] < 0
        )

    def _search_witness(self, R: np.ndarray, samples: int, seed: int, candidates: bool):
        n = R.shape[0]
        rng = np.random.default_rng(seed)
        directions = rng.standard_normal((samples, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        if candidates:
            fixed = np.vstack([-np.ones(n) / np.sqrt(n), -np.eye(n)])
            directions = np.vstack([fixed, directions])
        solvable = self.standard_form_solvable(R, directions)
        for k in np.flatnonzero(~solvable):
            q = directions[k]
            if self.solve_lcp(R, q, standard_form=True) is None:
                logger.info("Q-test witness found after %d samples", k + 1)
                return q, int(k + 1)
        return None, int(len(directions))

    def standard_form_solvable(self, matrix, directions: np.ndarray) -> np.ndarray:
        """Vectorized cone test: row k is True when q_k lies in a nonsingular complementary cone"""
        R = np.asarray(matrix, dtype=float)
        Q = np.atleast_2d(np.asarray(directions, dtype=float))
        tol = self.tolerance
        solvable = np.all(Q >= -tol, axis=1)
        for alpha in all_supports(R.shape[0], include_empty=False):
            idx = list(alpha)
            block = R[np.ix_(idx, idx)]
            if np.linalg.matrix_rank(block) < len(idx):
                continue
            Z = -np.linalg.solve(block, Q[:, idx].T).T
            W = Q + Z @ R[:, idx].T
            solvable |= np.all(Z >= -tol, axis=1) & np.all(W >= -tol, axis=1)
        return solvable

    # ----------------------------------------------------------- sign tests

    def is_sign_m(self, matrix) -> bool:
        """Exactly one positive entry in every row and every column"""
        R = np.asarray(matrix, dtype=float)
        if np.any(np.diag(R) != 0.0):
            raise PreconditionError("Sign test expects a zero diagonal")
        positive = R > 0.0
        return bool(np.all(positive.sum(axis=0) == 1) and np.all(positive.sum(axis=1) == 1))

    def inverse(self, matrix, exact: bool = False):
        if exact:
            M = rational_matrix(matrix)
            if M.det() == 0:
                raise SingularMatrixError("Matrix is singular")
            return M.inv()
        R = np.asarray(matrix, dtype=float)
        if np.linalg.matrix_rank(R) < R.shape[0]:
            raise SingularMatrixError("Matrix is singular")
        return np.linalg.inv(R)

    def inverse_positive(self, matrix, exact: bool = False) -> bool:
        inv = self.inverse(matrix, exact=exact)
        if exact:
            return all(v >= 0 for v in inv)
        return bool(np.all(inv >= -self.tolerance))

    def _safe_inverse_positive(self, R: np.ndarray) -> Optional[bool]:
        try:
            return self.inverse_positive(R)
        except SingularMatrixError:
            return None
