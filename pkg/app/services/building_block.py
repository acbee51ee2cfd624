"""
Building blocks: from an anchor y on ∂D to (w, {w^i}, z, {λ_i})
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import BlockConstructionError, PreconditionError
from app.models.sunspot import BlockCase, BlockReport
from app.services.geometry import FeasibleSetD
from app.services.lcp_solver import LcpSolution, LcpSolver

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class BuildingBlock:
    """
    w = z_0 y + Σ z_i w^i with w^i = λ_i r̂^i + (1 − λ_i) w.

    Row i of `w_i` is w^i; `z` has n + 1 entries, z[0] being the weight of y.
    """
    y: np.ndarray
    w: np.ndarray
    w_i: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    eps: float
    case: BlockCase = BlockCase.GENERIC

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.y - self.w)))

    @property
    def quit_mass(self) -> float:
        return float(np.sum(self.z[1:]))

    def support(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.z[i + 1] > settings.SUPPORT_TOLERANCE)


@dataclass
class BlockCheck:
    """Outcome of each condition, plus the residuals behind them"""
    conditions: Dict[str, bool] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    @property
    def failed(self) -> List[str]:
        return [name for name, ok in self.conditions.items() if not ok]


class BlockBuilder:
    """Builds and checks building blocks on a fixed set D"""

    def __init__(self, feasible_set: FeasibleSetD, tolerance: Optional[float] = None):
        self.D = feasible_set
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.solver = LcpSolver(self.tolerance)
        self._cache: Dict[Tuple, BuildingBlock] = {}
        self._zero_solution_checked = False

    # ------------------------------------------------------------------ check

    def check_block(self, block: BuildingBlock, eps: Optional[float] = None) -> BlockCheck:
        """Evaluate every block condition independently"""
        eps = block.eps if eps is None else eps
        tol = self.tolerance
        R = self.D.vertices
        n = self.D.n
        check = BlockCheck()

        segment_residual = 0.0
        separation = np.inf
        lam_ok = True
        for i in range(n):
            lam = block.lam[i]
            lam_ok &= bool(0.0 < lam < 1.0)
            on_segment = lam * R[:, i] + (1.0 - lam) * block.w
            segment_residual = max(segment_residual, float(np.max(np.abs(block.w_i[i] - on_segment))))
            separation = min(separation, float(np.max(np.abs(block.w_i[i] - block.w))))
        check.conditions["F1"] = lam_ok and segment_residual <= tol and separation > tol
        check.residuals["F1"] = segment_residual

        lowest = float(np.min(block.w_i))
        check.conditions["F2"] = lowest >= -eps - tol
        check.residuals["F2"] = lowest

        combination = block.z[0] * block.y + block.z[1:] @ block.w_i
        f3 = float(np.max(np.abs(block.w - combination)))
        distribution_ok = bool(np.all(block.z >= -tol)) and abs(float(np.sum(block.z)) - 1.0) <= tol
        check.conditions["F3"] = f3 <= tol and distribution_ok
        check.residuals["F3"] = f3

        f4 = max(
            (abs(float(block.w_i[i, i])) for i in range(n) if block.z[i + 1] > settings.SUPPORT_TOLERANCE),
            default=0.0,
        )
        check.conditions["F4"] = f4 <= tol
        check.residuals["F4"] = f4

        check.conditions["F5"] = block.quit_mass > settings.SUPPORT_TOLERANCE
        check.residuals["F5"] = block.quit_mass

        check.conditions["boundary"] = self.D.boundary(block.w)

        slack = 2.0 * block.quit_mass - block.drift
        check.conditions["drift_bound"] = slack >= -tol
        check.residuals["drift_bound"] = slack
        return check

    def report(self, block: BuildingBlock, check: Optional[BlockCheck] = None) -> BlockReport:
        check = self.check_block(block) if check is None else check
        return BlockReport(
            y=block.y.tolist(),
            w=block.w.tolist(),
            w_i=block.w_i.tolist(),
            z=block.z.tolist(),
            lambda_=block.lam.tolist(),
            case=block.case,
            eps=block.eps,
            drift=block.drift,
            conditions=check.conditions,
            residuals=check.residuals,
            passed=check.passed,
        )

    # ------------------------------------------------------------------ build

    def build_block(self, y, eps: float, check_preconditions: bool = True) -> BuildingBlock:
        """
        Build a block at anchor y

        Args:
            y: point of ∂D
            eps: block precision, in (0, 1)
            check_preconditions: require that LCP(R̂, 0) has only the trivial solution

        Returns:
            A block passing every condition of check_block
        """
        if not 0.0 < eps < 1.0:
            raise PreconditionError("eps must lie in (0, 1)")
        y = self.D.snap(y)
        key = (tuple(np.round(y, 12)), eps, check_preconditions)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        if not self.D.boundary(y):
            raise PreconditionError(f"Anchor {y.tolist()} is not on the boundary of D")
        if check_preconditions:
            self._require_no_zero_solution()

        face = self.D.active_set(y)
        if face and self.D.in_face(y, face):
            if check_preconditions:
                raise PreconditionError("Anchor lies in S(J_y), so LCP(R̂, 0) has a nontrivial solution")
            block = self._face_block(y, face, eps)
        else:
            block = self._dispatch(y, face, eps)

        check = self.check_block(block)
        if not check.passed and block.case != BlockCase.GENERIC:
            logger.warning("%s block failed %s; falling back to the generic search", block.case.value, check.failed)
            block = self._generic_block(y, eps)
            check = self.check_block(block)
        if not check.passed:
            raise BlockConstructionError(f"Block at {y.tolist()} fails {check.failed}", check.failed)
        self._cache[key] = block
        return block

    def _dispatch(self, y: np.ndarray, face: Tuple[int, ...], eps: float) -> BuildingBlock:
        if not face:
            return self._generic_block(y, eps)

        for i in face:
            lam = self.D.segment_exit(y, i)
            if lam > self.tolerance:
                logger.debug("single-direction block along r̂^%d with λ=%.6g", i + 1, lam)
                return self._single_direction_block(y, i, lam, eps)

        if self.D.cone_section_extent(y, face) > self.tolerance:
            block = self._simplex_section_block(y, face, eps)
        else:
            block = self._perturbation_block(y, face, eps)
        return block if block is not None else self._generic_block(y, eps)

    def _face_block(self, y: np.ndarray, face: Tuple[int, ...], eps: float) -> BuildingBlock:
        weights, _ = self.D.barycentric(y, face)
        z = np.zeros(self.D.n + 1)
        z[[i + 1 for i in face]] = weights / weights.sum()
        return BuildingBlock(
            y=y,
            w=y.copy(),
            w_i=(1.0 - eps) * y[None, :] + eps * self.D.vertices.T,
            z=z,
            lam=np.full(self.D.n, eps),
            eps=eps,
            case=BlockCase.FACE_POINT,
        )

    def _single_direction_block(self, y: np.ndarray, i: int, lam: float, eps: float) -> BuildingBlock:
        w = self.D.snap(lam * self.D.vertices[:, i] + (1.0 - lam) * y, settings.SUPPORT_TOLERANCE)
        z = np.zeros(self.D.n + 1)
        z[0] = 1.0 - lam
        z[i + 1] = lam
        return self._reweight(y, LcpSolution(w=w, z=z), eps, BlockCase.SINGLE_DIRECTION)

    def _simplex_section_block(self, y: np.ndarray, face: Tuple[int, ...], eps: float) -> Optional[BuildingBlock]:
        """Complementary point of (1 − δ) y + δ S(J_y), δ = ε, ε/2, ..."""
        R = self.D.vertices
        supports = [alpha for k in range(1, len(face) + 1) for alpha in combinations(face, k)]
        delta = eps
        for _ in range(settings.LIMIT_HALVING_CAP + 1):
            solution = self.solver.nontrivial_solution(R, y, supports=supports, z0_bounds=(1.0 - delta, 1.0 - delta))
            if solution is not None:
                logger.debug("simplex-section block with δ=%.3g, support %s", delta, solution.support())
                return self._reweight(y, solution, eps, BlockCase.SIMPLEX_SECTION)
            delta /= 2.0
        return None

    def _perturbation_block(self, y: np.ndarray, face: Tuple[int, ...], eps: float) -> Optional[BuildingBlock]:
        """
        Solve LCP(R̂, y_m) for anchors y_m → y taken toward the barycenter of S(J_y),
        then re-solve at y on the limiting support
        """
        R = self.D.vertices
        direction = R[:, list(face)].mean(axis=1) - y
        distance = float(np.max(np.abs(direction)))
        if distance <= self.tolerance:
            return None

        previous: Optional[LcpSolution] = None
        agreements = 0
        support = None
        for m in range(settings.LIMIT_HALVING_CAP + 1):
            t = min(1.0, eps * 2.0 ** (-m) / distance)
            solution = self.solver.solve_lcp(R, y + t * direction)
            if solution is None:
                continue
            if previous is not None and solution.support() == previous.support():
                change = max(
                    float(np.max(np.abs(solution.w - previous.w))),
                    float(np.max(np.abs(solution.z - previous.z))),
                )
                agreements = agreements + 1 if change < settings.CAUCHY_TOLERANCE else 0
            else:
                agreements = 0
            previous = solution
            support = solution.support()
            if agreements >= 2:
                break

        if not support:
            return None
        logger.debug("perturbation limit on support %s", support)
        limit = self.solver.nontrivial_solution(R, y, supports=[support])
        if limit is None:
            return None
        return self._reweight(y, limit, eps, BlockCase.CONVERGING_PERTURBATION)

    def _generic_block(self, y: np.ndarray, eps: float) -> BuildingBlock:
        solution = self.solver.nontrivial_solution(self.D.vertices, y)
        if solution is None:
            raise BlockConstructionError(f"LCP(R̂, y) has no nontrivial solution at y = {y.tolist()}", ["F5"])
        return self._reweight(y, solution, eps, BlockCase.GENERIC)

    def _reweight(self, y: np.ndarray, solution: LcpSolution, eps: float, case: BlockCase) -> BuildingBlock:
        """ẑ_0 = ε z_0 / (ε z_0 + Σ z_i), ẑ_i = z_i / (ε z_0 + Σ z_i), w^i = (1 − ε) w + ε r̂^i"""
        z = solution.z
        denominator = eps * z[0] + float(np.sum(z[1:]))
        z_hat = np.empty_like(z)
        z_hat[0] = eps * z[0] / denominator
        z_hat[1:] = z[1:] / denominator
        w = self.D.snap(solution.w, settings.SUPPORT_TOLERANCE)
        return BuildingBlock(
            y=y,
            w=w,
            w_i=(1.0 - eps) * w[None, :] + eps * self.D.vertices.T,
            z=z_hat,
            lam=np.full(self.D.n, eps),
            eps=eps,
            case=case,
        )

    def _require_no_zero_solution(self) -> None:
        if self._zero_solution_checked:
            return
        if self.solver.nontrivial_zero_solution(self.D.vertices) is not None:
            raise PreconditionError("LCP(R̂, 0) has a nontrivial solution; use the stationary construction")
        self._zero_solution_checked = True
