"""
Explicit stationary ε-equilibrium constructions and their verification
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import PreconditionError
from app.models.game import (
    DeviationEntry,
    StationaryBranch,
    StationaryProfile,
    StationaryReport,
)
from app.services.classification import Classification, PlayerClassifier
from app.services.game_model import GameService, QuittingGame
from app.services.lcp_solver import LcpSolution, LcpSolver

logger = logging.getLogger(__name__)

# Gain bound of each construction, in units of ε
BRANCH_BOUNDS = {
    StationaryBranch.CONTINUE_FOREVER: 1.0,
    StationaryBranch.SINGLE_QUITTER: 2.0,
    StationaryBranch.NONNEGATIVE_QUIT_PAYOFF: 4.0,
    StationaryBranch.ZERO_LCP: 4.0,
    StationaryBranch.CANDIDATE: 1.0,
}


@dataclass
class StationaryConstruction:
    """A profile together with the construction that produced it"""
    branch: StationaryBranch
    profile: StationaryProfile


class StationaryConstructor:
    """Builds stationary profiles for games that admit them"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.game_service = GameService(tolerance)
        self.classifier = PlayerClassifier()
        self.lcp_solver = LcpSolver(tolerance)

    # ------------------------------------------------------------ constructions

    def construct_normal_nonneg(
        self,
        game: QuittingGame,
        cls: Classification,
        i: int,
        eps: float,
    ) -> StationaryProfile:
        """
        Player i quits with probability ε, a punisher j with probability ε²

        Args:
            game: normalized game
            cls: its classification
            i: 0-based player whose quit payoff is nonnegative
            eps: target precision

        Returns:
            Stationary profile
        """
        _check_eps(eps)
        if not 0 <= i < game.n_players:
            raise PreconditionError(f"Player {i + 1} does not exist")
        if i not in cls.simon_normal:
            raise PreconditionError(f"Player {i + 1} has no punisher")
        if np.any(game.quit_alone(i) < 0.0):
            raise PreconditionError(f"Quit payoff of player {i + 1} has a negative coordinate")
        j = self._punisher(game, i)
        x = np.zeros(game.n_players)
        x[i] = eps
        x[j] = eps * eps
        return StationaryProfile(quit_probs=x.tolist())

    def _punisher(self, game: QuittingGame, i: int) -> int:
        slack = self.classifier.slack
        for j in range(game.n_players):
            if j != i and game.quit_alone(j)[i] <= slack:
                return j
        raise PreconditionError(f"No player punishes player {i + 1}")

    def construct_all_abnormal(
        self,
        game: QuittingGame,
        cls: Classification,
        eps: float,
    ) -> StationaryConstruction:
        _check_eps(eps)
        if cls.n > 0:
            raise PreconditionError("Game has normal players")
        if not cls.simon_normal:
            negative = np.flatnonzero(game.stay_payoff < 0.0)
            x = np.zeros(game.n_players)
            if negative.size == 0:
                return StationaryConstruction(
                    StationaryBranch.CONTINUE_FOREVER, StationaryProfile(quit_probs=x.tolist())
                )
            x[negative[0]] = eps
            return StationaryConstruction(
                StationaryBranch.SINGLE_QUITTER, StationaryProfile(quit_probs=x.tolist())
            )

        # deepest nonempty level of the chain
        level = max(k for k, members in enumerate(cls.chain) if members)
        i = min(cls.chain[level])
        logger.debug("all players abnormal; player %d at level %d has a nonnegative quit payoff", i + 1, level)
        return StationaryConstruction(
            StationaryBranch.NONNEGATIVE_QUIT_PAYOFF,
            self.construct_normal_nonneg(game, cls, i, eps),
        )

    def construct_from_lcp_zero(
        self,
        game: QuittingGame,
        cls: Classification,
        sol: LcpSolution,
        eps: float,
    ) -> StationaryConstruction:
        """Each normal player quits with probability ε z_i"""
        _check_eps(eps)
        if cls.n == 0 or sol.n != cls.n:
            raise PreconditionError("Solution does not match the normal players")
        if not sol.is_valid(cls.restricted, np.zeros(cls.n), self.tolerance):
            raise PreconditionError("Not a solution of LCP(R̂, 0)")
        if sol.z0 >= 1.0 - settings.SUPPORT_TOLERANCE:
            raise PreconditionError("Solution is trivial (z_0 = 1)")

        support = sol.support()
        if len(support) == 1:
            player = cls.player_order[support[0]]
            return StationaryConstruction(
                StationaryBranch.NONNEGATIVE_QUIT_PAYOFF,
                self.construct_normal_nonneg(game, cls, player, eps),
            )
        x = cls.lift(eps * sol.z[1:], fill=0.0)
        return StationaryConstruction(StationaryBranch.ZERO_LCP, StationaryProfile(quit_probs=x.tolist()))

    # ------------------------------------------------------------ verification

    def verify_stationary(
        self,
        game: QuittingGame,
        x,
        eps: float,
        factor: float = 1.0,
        discount: Optional[float] = None,
    ) -> StationaryReport:
        """
        Compare every player's best stationary deviation with the profile payoff

        Args:
            game: game in stored scale
            x: stationary profile
            eps: precision
            factor: pass when every gain is at most factor * eps
            discount: evaluate the discounted game instead of the undiscounted one

        Returns:
            Verification report
        """
        _check_eps(eps)
        profile = x if isinstance(x, StationaryProfile) else StationaryProfile(quit_probs=list(x))
        if len(profile.quit_probs) != game.n_players:
            raise PreconditionError(f"Profile must have length {game.n_players}")

        if discount is None:
            payoff = self.game_service.stationary_payoff(game, profile)
            gains = [self.game_service.stationary_deviation_gain(game, profile, i) for i in range(game.n_players)]
        else:
            payoff = self.game_service.discounted_payoff(game, profile, discount)
            gains = [
                self.game_service.discounted_deviation_gain(game, profile, i, discount)
                for i in range(game.n_players)
            ]

        bound = factor * eps
        max_gain = float(max(gains))
        return StationaryReport(
            eps=eps,
            bound=bound,
            profile=profile,
            payoff=[float(v) for v in payoff],
            deviations=[
                DeviationEntry(player=i + 1, payoff=float(payoff[i] + g), gain=float(g))
                for i, g in enumerate(gains)
            ],
            max_gain=max_gain,
            passed=max_gain <= bound + self.tolerance,
        )

    # -------------------------------------------------------------- dispatcher

    def construct_stationary(self, game: QuittingGame, eps: float) -> StationaryReport:
        """
        Pick the applicable construction, then verify; halve ε until verification passes

        Raises:
            PreconditionError: LCP(R̂, 0) has only the trivial solution, so the
                sunspot construction is needed instead
        """
        _check_eps(eps)
        game = self.game_service.normalize(game)
        cls = self.classifier.classify_players(game)
        zero_solution = None
        if cls.n > 0:
            zero_solution = self.lcp_solver.nontrivial_zero_solution(cls.restricted)
            if zero_solution is None:
                raise PreconditionError(
                    "LCP(R̂, 0) has only the trivial solution; use the sunspot construction"
                )

        current = eps
        report = None
        for halvings in range(settings.EPS_HALVING_RETRIES + 1):
            if cls.n == 0:
                construction = self.construct_all_abnormal(game, cls, current)
            else:
                construction = self.construct_from_lcp_zero(game, cls, zero_solution, current)
            report = self.verify_stationary(
                game, construction.profile, eps, factor=BRANCH_BOUNDS[construction.branch]
            )
            report.branch = construction.branch
            report.halvings = halvings
            report.eps_used = current
            if report.passed:
                break
            logger.warning("stationary profile failed at eps=%g; halving", current)
            current /= 2.0
        return report

    def verify_candidate(
        self,
        game: QuittingGame,
        quit_probs: Sequence[float],
        eps: float,
        continuation: Optional[Sequence[float]] = None,
        discount: Optional[float] = None,
    ) -> StationaryReport:
        """Verify a user-supplied profile, optionally in the auxiliary game with continuation payoff q"""
        game = self.game_service.normalize(game)
        if continuation is not None:
            game = self.game_service.auxiliary_game(game, continuation)
        report = self.verify_stationary(game, quit_probs, eps, discount=discount)
        report.branch = StationaryBranch.CANDIDATE
        return report

    def extend_witness(self, cls: Classification, q_hat) -> np.ndarray:
        """Lift a restricted continuation payoff to all players; abnormal players get 1"""
        q_hat = np.asarray(q_hat, dtype=float)
        if q_hat.shape != (cls.n,):
            raise PreconditionError(f"Restricted vector must have length {cls.n}")
        return cls.lift(q_hat, fill=1.0)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise PreconditionError("eps must lie in (0, 1)")
