"""
Normal/abnormal player classification and the restricted quit matrix
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import PreconditionError
from app.models.game import ClassificationReport
from app.services.game_model import QuittingGame

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Classification:
    """
    Decreasing chain I_0 ⊇ I_1 ⊇ ... ⊇ I_L and the normal set I_* = I_L.

    `restricted` is the n x n matrix R̂ whose column k is the quit payoff of
    normal player `player_order[k]` restricted to the normal coordinates.
    """
    n_players: int
    chain: Tuple[FrozenSet[int], ...]
    restricted: np.ndarray
    player_order: Tuple[int, ...]

    @property
    def normal_set(self) -> FrozenSet[int]:
        return self.chain[-1]

    @property
    def n(self) -> int:
        return len(self.player_order)

    @property
    def simon_normal(self) -> FrozenSet[int]:
        """One-step set I_1"""
        return self.chain[1] if len(self.chain) > 1 else self.chain[0]

    @property
    def abnormal(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n_players) if i not in self.normal_set)

    def is_normal(self, player: int) -> bool:
        return player in self.normal_set

    def normal_index(self, player: int) -> int:
        return self.player_order.index(player)

    def lift(self, restricted_vector, fill: float = 0.0) -> np.ndarray:
        """Embed a vector over normal players into all N coordinates"""
        full = np.full(self.n_players, fill, dtype=float)
        full[list(self.player_order)] = restricted_vector
        return full

    def restrict(self, vector) -> np.ndarray:
        return np.asarray(vector, dtype=float)[list(self.player_order)]

    def to_report(self, warnings: Sequence[str] = ()) -> ClassificationReport:
        return ClassificationReport(
            chain=[sorted(p + 1 for p in level) for level in self.chain],
            normal_set=sorted(p + 1 for p in self.normal_set),
            simon_normal=sorted(p + 1 for p in self.simon_normal),
            abnormal=[p + 1 for p in self.abnormal],
            restricted_matrix=self.restricted.tolist(),
            warnings=list(warnings),
        )


class PlayerClassifier:
    """Iterates the punishment recursion until it stabilizes"""

    def __init__(self, slack: Optional[float] = None):
        self.slack = settings.CLASSIFY_SLACK if slack is None else slack

    def classify_players(self, game: QuittingGame, exact: bool = False) -> Classification:
        """
        Compute the chain of player sets and the restricted matrix

        Args:
            game: normalized quitting game
            exact: compare against 0 without slack

        Returns:
            Classification with chain, normal set and R̂
        """
        if not game.is_normalized(settings.TOLERANCE):
            raise PreconditionError("Game must be normalized before classification")
        slack = 0.0 if exact else self.slack

        current = frozenset(range(game.n_players))
        chain: List[FrozenSet[int]] = [current]
        for _ in range(game.n_players + 1):
            following = frozenset(
                i for i in current
                if any(game.quit_alone(j)[i] <= slack for j in current if j != i)
            )
            if following == current:
                break
            chain.append(following)
            current = following

        order = tuple(sorted(current))
        restricted = np.array(
            [[game.quit_alone(j)[i] for j in order] for i in order], dtype=float
        ).reshape(len(order), len(order))
        np.fill_diagonal(restricted, 0.0)
        logger.debug("classification chain %s", [sorted(s) for s in chain])
        return Classification(
            n_players=game.n_players,
            chain=tuple(chain),
            restricted=restricted,
            player_order=order,
        )

    def restricted_matrix(self, cls: Classification) -> np.ndarray:
        if cls.n == 0:
            raise PreconditionError(
                "No normal players: use the all-abnormal stationary construction"
            )
        return cls.restricted.copy()

    def abnormal_payoffs_positive(self, game: QuittingGame, cls: Classification) -> bool:
        """Every abnormal player gains strictly when a normal player quits alone"""
        return all(
            game.quit_alone(i)[j] > 0.0
            for i in cls.normal_set
            for j in cls.abnormal
        )
