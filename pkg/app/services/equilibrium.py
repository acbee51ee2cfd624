"""
End-to-end pipelines shared by the command line and the API
"""
import logging
from typing import Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    BlockConstructionError,
    IterationCapExceeded,
    PreconditionError,
    QuittingGameError,
)
from app.models.lcp import LcpReport, QMatrixVerdict
from app.models.sunspot import BlockReport, SunspotPath, SunspotProfile, SunspotReport
from app.services.building_block import BlockBuilder
from app.services.classification import Classification, PlayerClassifier
from app.services.evaluation import ProfileEvaluator
from app.services.game_model import GameService, QuittingGame
from app.services.geometry import FeasibleSetD
from app.services.lcp_solver import LcpSolver
from app.services.m_matrix import MMatrixPath
from app.services.sunspot import SunspotConstructor

logger = logging.getLogger(__name__)


class EquilibriumService:
    """Normalizes, classifies and dispatches a game to the right construction"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.games = GameService(self.tolerance)
        self.classifier = PlayerClassifier()
        self.lcp = LcpSolver(self.tolerance)
        self.sunspots = SunspotConstructor(self.tolerance)
        self.evaluator = ProfileEvaluator(self.tolerance)
        self.m_matrix = MMatrixPath(self.tolerance)

    def prepare(self, game: QuittingGame) -> tuple:
        """Normalized game and its classification"""
        normalized = self.games.normalize(game)
        return normalized, self.classifier.classify_players(normalized)

    def solve_lcp(self, matrix, q: Sequence[float], standard_form: bool = False, exact: bool = False) -> LcpReport:
        R = np.asarray(matrix, dtype=float)
        q = np.asarray(q, dtype=float)
        if q.shape != (R.shape[0],):
            raise PreconditionError(f"q must have length {R.shape[0]}")
        solution = self.lcp.solve_lcp(R, q, standard_form=standard_form, exact=exact)
        return LcpReport(
            n=R.shape[0],
            q=q.tolist(),
            standard_form=standard_form,
            solution=None if solution is None else solution.to_report(),
            solvable=solution is not None,
        )

    def q_matrix_test(self, matrix, samples: Optional[int] = None, seed: Optional[int] = None) -> QMatrixVerdict:
        return self.lcp.q_matrix_test(matrix, samples=samples, seed=seed)

    def build_block(self, game: QuittingGame, y: Sequence[float], eps: float) -> BlockReport:
        """Building block at an anchor given over the normal players"""
        _, cls = self.prepare(game)
        builder = BlockBuilder(FeasibleSetD(cls.restricted, self.tolerance), self.tolerance)
        return builder.report(builder.build_block(np.asarray(y, dtype=float), eps))

    def run_sunspot(
        self,
        game: QuittingGame,
        eps: float,
        target: Optional[Sequence[float]] = None,
        start: Optional[Sequence[float]] = None,
    ) -> SunspotReport:
        """
        Construct and verify a sunspot ε-equilibrium

        Args:
            game: quitting game in stored scale
            eps: precision in (0, 1)
            target: payoff to implement through the M-matrix path
            start: first anchor of the sequence, over the normal players

        Returns:
            SunspotReport; ε is halved while verification fails, and the
            verification bound stays at the requested ε
        """
        if not 0.0 < eps < 1.0:
            raise PreconditionError("eps must lie in (0, 1)")
        game, cls = self.prepare(game)
        if cls.n == 0:
            raise PreconditionError("Every player is abnormal; use the stationary construction")
        if self.lcp.nontrivial_zero_solution(cls.restricted) is not None:
            raise PreconditionError("LCP(R̂, 0) has a nontrivial solution; use the stationary construction")

        current = eps
        report = None
        failure: Optional[QuittingGameError] = None
        for halvings in range(settings.EPS_HALVING_RETRIES + 1):
            try:
                if target is not None:
                    attempt = self._m_matrix_run(game, cls, current, eps, target)
                else:
                    attempt = self._sequence_run(game, cls, current, eps, start)
            except (BlockConstructionError, IterationCapExceeded) as e:
                logger.warning("sunspot construction failed at eps=%g: %s; halving", current, e)
                if report is not None:
                    break
                failure = e
                current /= 2.0
                continue
            report = attempt
            report.halvings = halvings
            if report.evaluation.passed:
                break
            logger.warning("sunspot profile failed %s at eps=%g; halving", report.evaluation.failures, current)
            current /= 2.0
        if report is None:
            raise failure
        return report

    def _sequence_run(
        self,
        game: QuittingGame,
        cls: Classification,
        eps: float,
        requested: float,
        start: Optional[Sequence[float]],
    ) -> SunspotReport:
        D = FeasibleSetD(cls.restricted, self.tolerance)
        sequence = self.sunspots.generate_sequence(cls, D, eps, start=start)
        profile = self.sunspots.assemble_profile(sequence, cls, eps)
        anchor = cls.lift(sequence.blocks[-1].w)
        evaluation = self.evaluator.verify_sunspot(profile, game, requested, anchor_value=anchor)
        return SunspotReport(
            path=SunspotPath.ANCHOR_SEQUENCE,
            eps=eps,
            sequence=sequence.to_report(),
            evaluation=evaluation,
            profile=profile,
        )

    def _m_matrix_run(
        self,
        game: QuittingGame,
        cls: Classification,
        eps: float,
        requested: float,
        target: Sequence[float],
    ) -> SunspotReport:
        targets = self.m_matrix.m_matrix_targets(cls)
        conditions = self.m_matrix.check_m_targets(cls, targets)
        if not all(conditions.values()):
            failed = [name for name, ok in conditions.items() if not ok]
            raise QuittingGameError(f"M-matrix targets fail {failed}")
        profile = self.m_matrix.implement_payoff(game, cls, target, eps, targets=targets)
        evaluation = self.evaluator.verify_sunspot(
            profile, game, requested, anchor_value=np.asarray(target, dtype=float)
        )
        return SunspotReport(
            path=SunspotPath.M_MATRIX,
            eps=eps,
            m_matrix=self.m_matrix.report(cls),
            evaluation=evaluation,
            profile=profile,
        )

    def verify_profile(self, game: QuittingGame, profile: SunspotProfile, eps: float):
        game, _ = self.prepare(game)
        return self.evaluator.verify_sunspot(profile, game, eps)

    def simulate(self, game: QuittingGame, profile: SunspotProfile, seed: Optional[int] = None, runs: Optional[int] = None):
        game, _ = self.prepare(game)
        return self.evaluator.simulate(profile, game, seed=seed, runs=runs)
