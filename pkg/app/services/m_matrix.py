"""
Sunspot equilibria for games whose restricted matrix is an M-matrix.

Every unit direction w^i = e^i / ‖R̂^{-1} e^i‖_1 lies in D, and D is their
convex hull. Implementing w^i takes one quit by the unique player j_i with
r̂^{j_i}_i > 0, followed by a lottery over the other directions.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import sympy
from scipy.optimize import nnls

from app.core.config import settings
from app.core.exceptions import PreconditionError
from app.models.sunspot import Kiloblock, MMatrixReport, MMatrixTarget, SunspotProfile
from app.services.classification import Classification
from app.services.game_model import QuittingGame
from app.services.lcp_solver import LcpSolver, rational_matrix
from app.services.sunspot import block_length

logger = logging.getLogger(__name__)


@dataclass
class UnitTarget:
    """Decomposition w^i = α r̂^{j} + (1 − α) y, y = Σ β_k w^k (0-based indices)"""
    player: int
    w: np.ndarray
    lam: np.ndarray
    alpha: float
    j: int
    y: np.ndarray
    beta: np.ndarray

    def to_model(self) -> MMatrixTarget:
        return MMatrixTarget(
            player=self.player + 1,
            w=self.w.tolist(),
            lam=self.lam.tolist(),
            alpha=self.alpha,
            j=self.j + 1,
            y=self.y.tolist(),
            beta=self.beta.tolist(),
        )


class MMatrixPath:
    """Finite-state sunspot profiles when R̂ is an inverse-positive M-matrix"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.solver = LcpSolver(self.tolerance)

    def m_matrix_targets(self, cls: Classification, exact: bool = False) -> List[UnitTarget]:
        """
        Unit-direction targets of every normal player

        Args:
            cls: classification of a normalized game
            exact: carry out the inversion and the decomposition in rationals

        Returns:
            One UnitTarget per normal player, in normal order
        """
        R = cls.restricted
        n = cls.n
        if n == 0:
            raise PreconditionError("No normal players")
        if not self.solver.is_sign_m(R):
            raise PreconditionError("Restricted matrix is not an M-matrix")
        if not self.solver.inverse_positive(R, exact=exact):
            raise PreconditionError("Restricted matrix is not inverse positive")

        if exact:
            return self._exact_targets(R)

        inverse = self.solver.inverse(R)
        lam = np.clip(inverse, 0.0, None)
        norms = lam.sum(axis=0)
        targets = []
        for i in range(n):
            w = np.zeros(n)
            w[i] = 1.0 / norms[i]
            j = int(np.flatnonzero(R[i] > 0.0)[0])
            alpha = self._alpha(w[i], R[i, j])
            y = np.clip((w - alpha * R[:, j]) / (1.0 - alpha), 0.0, None)
            beta = y * norms
            targets.append(UnitTarget(i, w, lam[:, i], alpha, j, y, beta / beta.sum()))
        return targets

    def _exact_targets(self, R: np.ndarray) -> List[UnitTarget]:
        n = R.shape[0]
        M = self.solver.inverse(R, exact=True)
        R_exact = rational_matrix(R)
        norms = [sum(M[:, i]) for i in range(n)]
        targets = []
        for i in range(n):
            w = sympy.zeros(n, 1)
            w[i] = 1 / norms[i]
            j = next(k for k in range(n) if R_exact[i, k] > 0)
            alpha = w[i] / R_exact[i, j]
            alpha = alpha if alpha < 1 else sympy.Rational(1, 2)
            y = (w - alpha * R_exact[:, j]) / (1 - alpha)
            beta = [y[k] * norms[k] for k in range(n)]
            targets.append(UnitTarget(
                player=i,
                w=np.array([float(v) for v in w]),
                lam=np.array([float(v) for v in M[:, i]]),
                alpha=float(alpha),
                j=j,
                y=np.array([float(v) for v in y]),
                beta=np.array([float(v) for v in beta]),
            ))
        return targets

    @staticmethod
    def _alpha(w_i: float, r_ji: float) -> float:
        """Largest α keeping w^i − α r̂^{j_i} ≥ 0, or ½ when that reaches 1"""
        alpha = w_i / r_ji
        return alpha if alpha < 1.0 else 0.5

    def check_m_targets(self, cls: Classification, targets: Sequence[UnitTarget]) -> Dict[str, bool]:
        """Segment, nonnegativity, lottery and indifference conditions on the targets"""
        tol = self.tolerance
        R = cls.restricted
        W = np.array([t.w for t in targets])
        f1 = f2 = f3 = f4 = True
        for t in targets:
            combination = t.alpha * R[:, t.j] + (1.0 - t.alpha) * t.y
            f1 &= 0.0 < t.alpha < 1.0 and np.allclose(combination, t.w, atol=tol)
            f1 &= bool(np.max(np.abs(t.w - t.y)) > tol)
            f2 &= bool(np.all(t.w >= -tol) and np.all(t.y >= -tol))
            f3 &= bool(np.all(t.beta >= -tol)) and abs(float(t.beta.sum()) - 1.0) <= tol
            f3 &= bool(np.allclose(t.beta @ W, t.y, atol=tol))
            f4 &= abs(float(t.w[t.j])) <= tol and abs(float(t.y[t.j])) <= tol
        unit = all(
            t.w[t.player] > tol and np.count_nonzero(np.abs(t.w) > tol) == 1 for t in targets
        )
        return {"F1'": bool(f1), "F2'": bool(f2), "F3'": bool(f3), "F4'": bool(f4), "unit_direction": bool(unit)}

    def _check_abnormal_coordinates(self, game: QuittingGame, cls: Classification, target: np.ndarray) -> None:
        """Abnormal players receive Σ μ_k r^{k} where μ reproduces the target on the normal players"""
        if not cls.abnormal:
            return
        A = np.vstack([cls.restricted, np.ones((1, cls.n))])
        mu, _ = nnls(A, np.append(cls.restrict(target), 1.0))
        lifted = sum(m * game.quit_alone(p) for m, p in zip(mu, cls.player_order))
        abnormal = list(cls.abnormal)
        gap = float(np.max(np.abs(target[abnormal] - lifted[abnormal])))
        if gap > 1e-7:
            raise PreconditionError(
                f"Target gives abnormal players {target[abnormal].tolist()}, "
                f"but the quit payoffs deliver {np.round(lifted[abnormal], 9).tolist()}"
            )

    def report(self, cls: Classification, exact: bool = False) -> MMatrixReport:
        targets = self.m_matrix_targets(cls, exact=exact)
        conditions = self.check_m_targets(cls, targets)
        return MMatrixReport(
            targets=[t.to_model() for t in targets],
            conditions=conditions,
            passed=all(conditions.values()),
        )

    def implement_payoff(
        self,
        game: QuittingGame,
        cls: Classification,
        target: Sequence[float],
        eps: float,
        targets: Optional[List[UnitTarget]] = None,
    ) -> SunspotProfile:
        """
        Profile whose value on the normal players is the given payoff

        Kiloblock i implements w^i: player j_i quits in blocks of intensity ε
        until a type-0 draw hands play to kiloblock k with probability β^i_k.
        Nature's initial draw mixes the w^i.

        Args:
            game: normalized game; abnormal coordinates of the target must
                match the quit payoffs its normal players hand them
            cls: classification of `game`
            target: payoff vector over all players, in D̃
            eps: precision in (0, 1)

        Returns:
            SunspotProfile with successor distributions and an initial mix
        """
        if not 0.0 < eps < 1.0:
            raise PreconditionError("eps must lie in (0, 1)")
        targets = self.m_matrix_targets(cls) if targets is None else targets
        target = np.asarray(target, dtype=float)
        if target.shape != (cls.n_players,):
            raise PreconditionError(f"Target must have length {cls.n_players}")
        if np.any(target < -self.tolerance):
            raise PreconditionError("Target has a negative coordinate")

        restricted = cls.restrict(target)
        norms = np.array([1.0 / t.w[t.player] for t in targets])
        mix = restricted * norms
        if abs(float(mix.sum()) - 1.0) > 1e-7:
            raise PreconditionError("Target is not in the convex hull of the quit payoffs")
        self._check_abnormal_coordinates(game, cls, target)
        mix = np.clip(mix, 0.0, None)
        mix /= mix.sum()

        length = block_length([eps], eps)
        kiloblocks = []
        for t in targets:
            z = np.zeros(cls.n + 1)
            z[t.j + 1] = t.alpha / (t.alpha + eps * (1.0 - t.alpha))
            z[0] = 1.0 - z[t.j + 1]
            kiloblocks.append(Kiloblock(
                z=z.tolist(),
                lambda_={str(t.j + 1): eps},
                block_len=length,
                successors={str(k): float(b) for k, b in enumerate(t.beta) if b > settings.SUPPORT_TOLERANCE},
            ))
        logger.info("M-matrix profile with initial mix %s", np.round(mix, 6).tolist())
        return SunspotProfile(
            kiloblocks=kiloblocks,
            initial={str(k): float(m) for k, m in enumerate(mix) if m > settings.SUPPORT_TOLERANCE},
            player_order=[p + 1 for p in cls.player_order],
            n_players=cls.n_players,
            eps=eps,
        )
