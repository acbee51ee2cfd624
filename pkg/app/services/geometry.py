"""
Convex geometry of the feasible set D = conv(r̂^1, ..., r̂^n) ∩ ℝ^n_{≥0}
"""
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import orth
from scipy.optimize import linprog, nnls

from app.core.config import settings

logger = logging.getLogger(__name__)

# row weight that keeps zero coordinates at zero when projecting onto D
_PIN_WEIGHT = 1e6


class FeasibleSetD:
    """
    Membership, relative-boundary and face queries on D.

    The boundary is taken relative to the affine hull of the vertices, which
    has dimension at most n − 1.
    """

    def __init__(self, restricted: np.ndarray, tolerance: Optional[float] = None):
        self.vertices = np.array(restricted, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[0] != self.vertices.shape[1]:
            raise ValueError("Restricted matrix must be square")
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.n = self.vertices.shape[0]
        directions = self.vertices - self.vertices[:, [0]]
        self.affine_hull_basis = orth(directions) if np.any(directions) else np.zeros((self.n, 0))

    # ---------------------------------------------------------- combinations

    def barycentric(self, y, columns: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, float]:
        """
        Nonnegative weights summing to one that reproduce y from the chosen vertices

        Returns:
            (weights over `columns`, residual norm); a residual near zero means y
            lies in the convex hull
        """
        columns = list(range(self.n)) if columns is None else list(columns)
        y = np.asarray(y, dtype=float)
        if not columns:
            return np.zeros(0), float(np.linalg.norm(y)) + 1.0
        # add one row to force a convex combination
        A = np.vstack([self.vertices[:, columns], np.ones((1, len(columns)))])
        b = np.append(y, 1.0)
        weights, residual = nnls(A, b)
        return weights, float(residual)

    def in_hull(self, y, columns: Optional[Sequence[int]] = None) -> bool:
        _, residual = self.barycentric(y, columns)
        return residual <= self.tolerance

    def in_face(self, y, face: Iterable[int]) -> bool:
        """y ∈ S(J) = conv{r̂^i : i ∈ J}"""
        return self.in_hull(y, sorted(face))

    # ----------------------------------------------------------- membership

    def membership(self, y) -> bool:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            return False
        return bool(np.all(y >= -self.tolerance)) and self.in_hull(y)

    def boundary(self, y) -> bool:
        """y ∈ D and either some coordinate vanishes or every representation has a zero weight"""
        if not self.membership(y):
            return False
        y = np.asarray(y, dtype=float)
        if np.min(y) <= self.tolerance:
            return True
        weight = self.max_min_weight(y)
        return weight is None or weight <= self.tolerance

    def active_set(self, y) -> Tuple[int, ...]:
        """J_y: coordinates at zero"""
        y = np.asarray(y, dtype=float)
        return tuple(int(i) for i in np.flatnonzero(np.abs(y) <= self.tolerance))

    def max_min_weight(self, y) -> Optional[float]:
        """Largest t such that y = Σ λ_i r̂^i with Σ λ_i = 1 and every λ_i ≥ t"""
        y = np.asarray(y, dtype=float)
        n = self.n
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_eq = np.zeros((n + 1, n + 1))
        A_eq[:n, :n] = self.vertices
        A_eq[n, :n] = 1.0
        b_eq = np.append(y, 1.0)
        A_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
        b_ub = np.zeros(n)
        bounds = [(0.0, None)] * n + [(None, 1.0)]
        result = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if result.status != 0:
            return None
        return float(-result.fun)

    # ------------------------------------------------------------- segments

    def segment_exit(self, y, i: int) -> float:
        """Largest λ ∈ [0, 1] with (1 − λ) y + λ r̂^i ≥ 0"""
        y = np.asarray(y, dtype=float)
        r = self.vertices[:, i]
        limit = 1.0
        for k in np.flatnonzero(r < 0.0):
            if y[k] <= self.tolerance:
                return 0.0
            limit = min(limit, y[k] / (y[k] - r[k]))
        return float(limit)

    def cone_section_extent(self, y, face: Sequence[int]) -> float:
        """
        Largest total weight μ on S(J) such that y + Σ_{j∈J} μ_j (r̂^j − y) stays in D.

        Zero means conv(S(J), y) ∩ D = {y}.
        """
        face = list(face)
        if not face:
            return 0.0
        y = np.asarray(y, dtype=float)
        m = len(face)
        directions = self.vertices[:, face] - y[:, None]
        c = -np.ones(m)
        A_ub = np.vstack([-directions, np.ones((1, m))])
        b_ub = np.append(y, 1.0)
        result = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0.0, None)] * m, method="highs")
        if result.status != 0:
            return 0.0
        return float(-result.fun)

    # ---------------------------------------------------------- start points

    def lexicographic_start(self) -> np.ndarray:
        """Point of D with lexicographically smallest coordinates"""
        n = self.n
        A_ub = [-self.vertices]
        b_ub = [np.zeros(n)]
        A_eq = np.ones((1, n))
        b_eq = np.ones(1)
        weights = None
        zeroed = []
        for k in range(n):
            result = linprog(
                self.vertices[k],
                A_ub=np.vstack(A_ub),
                b_ub=np.concatenate(b_ub),
                A_eq=A_eq,
                b_eq=b_eq,
                bounds=[(0.0, None)] * n,
                method="highs",
            )
            if result.status != 0:
                if weights is None:
                    raise ValueError("D is empty")
                break
            weights = result.x
            if result.fun <= self.tolerance:
                zeroed.append(k)
            # freeze coordinate k at its minimum before moving on
            A_ub.append(self.vertices[k][None, :])
            b_ub.append(np.array([result.fun + self.tolerance]))
        start = self.vertices @ weights
        start[zeroed] = 0.0
        return self.snap(start)

    def is_empty(self) -> bool:
        result = linprog(
            np.zeros(self.n),
            A_ub=-self.vertices,
            b_ub=np.zeros(self.n),
            A_eq=np.ones((1, self.n)),
            b_eq=np.ones(1),
            bounds=[(0.0, None)] * self.n,
            method="highs",
        )
        return result.status != 0

    def sample_boundary(self, count: int, seed: int = 0, max_draws: int = 100_000) -> List[np.ndarray]:
        """
        Random points of ∂D: draw a point of D, then walk toward a random vertex
        until the segment leaves the orthant
        """
        rng = np.random.default_rng(seed)
        points: List[np.ndarray] = []
        for _ in range(max_draws):
            if len(points) >= count:
                break
            weights = rng.dirichlet(np.full(self.n, 4.0))
            y = self.vertices @ weights
            if np.any(y < 0.0):
                continue
            i = int(rng.integers(self.n))
            lam = self.segment_exit(y, i)
            point = self.snap((1.0 - lam) * y + lam * self.vertices[:, i])
            if self.boundary(point):
                points.append(point)
        return points

    def snap(self, y, tolerance: Optional[float] = None) -> np.ndarray:
        """
        Zero out coordinates within tolerance of zero, then pull a point that sits
        just outside the hull back onto it with its zero coordinates kept at zero
        """
        tol = self.tolerance if tolerance is None else tolerance
        y = np.array(y, dtype=float)
        y[np.abs(y) <= tol] = 0.0
        if y.shape != (self.n,):
            return y
        _, residual = self.barycentric(y)
        if residual <= tol or residual > settings.SNAP_SLACK:
            return y

        pinned = y == 0.0
        rows = np.where(pinned, _PIN_WEIGHT, 1.0)
        A = np.vstack([self.vertices * rows[:, None], np.full((1, self.n), _PIN_WEIGHT)])
        b = np.append(y * rows, _PIN_WEIGHT)
        weights, _ = nnls(A, b)
        if weights.sum() <= 0.0:
            return y
        projected = self.vertices @ (weights / weights.sum())
        projected[pinned] = 0.0
        projected[np.abs(projected) <= tol] = 0.0
        logger.debug("projected %s onto D (residual %.3g)", y.tolist(), residual)
        return projected
