"""
Quitting game representation, normalization and closed-form stationary payoffs
"""
import json
import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import GameFormatError
from app.models.game import GameFile, MatrixFile, StationaryProfile, parse_coalition_key
from app.models.sunspot import SunspotProfile

logger = logging.getLogger(__name__)

Coalition = FrozenSet[int]
ProfileLike = Union[StationaryProfile, Sequence[float], np.ndarray]


def _frozen(vector) -> np.ndarray:
    arr = np.array(vector, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuittingGame:
    """
    N-player quitting game.

    Players are 0-based internally. Coalitions absent from `payoffs` pay
    `default` (the zero vector until the game is normalized).
    """
    n_players: int
    payoffs: Dict[Coalition, np.ndarray]
    default: np.ndarray = None
    scale: float = 1.0
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.default is None:
            object.__setattr__(self, "default", _frozen(np.zeros(self.n_players)))

    def payoff(self, coalition: Iterable[int]) -> np.ndarray:
        return self.payoffs.get(frozenset(coalition), self.default)

    def quit_alone(self, i: int) -> np.ndarray:
        return self.payoff((i,))

    @property
    def stay_payoff(self) -> np.ndarray:
        return self.payoff(())

    def quit_matrix(self) -> np.ndarray:
        """N x N matrix whose i'th column is r^{i}"""
        return np.column_stack([self.quit_alone(i) for i in range(self.n_players)])

    def max_abs_payoff(self) -> float:
        values = [np.max(np.abs(v)) for v in self.payoffs.values()]
        values.append(float(np.max(np.abs(self.default))))
        return float(max(values))

    def is_normalized(self, tolerance: float = 0.0) -> bool:
        return all(abs(self.quit_alone(i)[i]) <= tolerance for i in range(self.n_players))


class GameService:
    """Load, normalize and evaluate quitting games under stationary play"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = tolerance if tolerance is not None else settings.TOLERANCE

    # ------------------------------------------------------------------ loading

    def load_game(self, path: Union[str, Path], strict: bool = False) -> QuittingGame:
        """
        Load a game file

        Args:
            path: JSON file in the game format
            strict: reject payoffs outside [-1, 1] instead of rescaling

        Returns:
            Game with every coalition resolvable
        """
        return self.parse_game(_read_json(path, "Game"), strict=strict)

    def load_matrix(self, path: Union[str, Path]) -> np.ndarray:
        try:
            parsed = MatrixFile.model_validate(_read_json(path, "Matrix"))
        except ValidationError as e:
            raise GameFormatError(f"Invalid matrix: {e}")
        return np.array(parsed.matrix, dtype=float)

    def load_profile(self, path: Union[str, Path]) -> SunspotProfile:
        try:
            return SunspotProfile.model_validate(_read_json(path, "Profile"))
        except ValidationError as e:
            raise GameFormatError(f"Invalid profile: {e}")

    def parse_game(self, data: Dict[str, Any], strict: bool = False) -> QuittingGame:
        try:
            parsed = GameFile.model_validate(data)
        except ValidationError as e:
            raise GameFormatError(f"Invalid game: {e}")

        n = parsed.players
        payoffs = {
            frozenset(m - 1 for m in parse_coalition_key(key)): _frozen(vector)
            for key, vector in parsed.payoffs.items()
        }
        warnings = []
        missing = (1 << n) - len(payoffs)
        if missing:
            message = f"{missing} coalition payoffs defaulted to the zero vector"
            logger.warning(message)
            warnings.append(message)

        game = QuittingGame(n_players=n, payoffs=payoffs, scale=parsed.scale, warnings=tuple(warnings))
        bound = game.max_abs_payoff()
        if bound > 1.0 + self.tolerance:
            if strict:
                raise GameFormatError(f"Payoff magnitude {bound} exceeds 1")
            game = self._rescale(game, bound)
        return game

    # ------------------------------------------------------------ normalization

    def normalize(self, game: QuittingGame) -> QuittingGame:
        """Shift every coordinate so that each player gets 0 when quitting alone"""
        diagonal = np.array([game.quit_alone(i)[i] for i in range(game.n_players)])
        if not np.any(diagonal):
            return game
        payoffs = {s: _frozen(v - diagonal) for s, v in game.payoffs.items()}
        shifted = QuittingGame(
            n_players=game.n_players,
            payoffs=payoffs,
            default=_frozen(game.default - diagonal),
            scale=game.scale,
            warnings=game.warnings,
        )
        bound = shifted.max_abs_payoff()
        if bound > 1.0:
            shifted = self._rescale(shifted, bound)
        return shifted

    def _rescale(self, game: QuittingGame, bound: float) -> QuittingGame:
        message = f"payoffs rescaled by 1/{bound:.12g} to fit [-1, 1]"
        logger.warning(message)
        return QuittingGame(
            n_players=game.n_players,
            payoffs={s: _frozen(v / bound) for s, v in game.payoffs.items()},
            default=_frozen(game.default / bound),
            scale=game.scale * bound,
            warnings=game.warnings + (message,),
        )

    def auxiliary_game(self, game: QuittingGame, continuation: Sequence[float]) -> QuittingGame:
        """Same game with the never-quit payoff replaced by `continuation`"""
        q = np.asarray(continuation, dtype=float)
        if q.shape != (game.n_players,):
            raise GameFormatError(f"Continuation payoff must have length {game.n_players}")
        payoffs = dict(game.payoffs)
        payoffs[frozenset()] = _frozen(q)
        return QuittingGame(game.n_players, payoffs, game.default, game.scale, game.warnings)

    # ---------------------------------------------------------------- payoffs

    def stationary_payoff(self, game: QuittingGame, x: ProfileLike) -> np.ndarray:
        """Expected absorbing payoff; x = 0 never absorbs and pays r^∅"""
        x = _as_vector(x, game.n_players)
        total, mass = self._absorbing_part(game, x)
        if mass <= 0.0:
            return np.array(game.stay_payoff, dtype=float)
        return total / mass

    def discounted_payoff(self, game: QuittingGame, x: ProfileLike, lam: float) -> np.ndarray:
        """λ-discounted payoff where r^∅ is the running payoff until absorption"""
        if not 0.0 <= lam < 1.0:
            raise ValueError("Discount factor must lie in [0, 1)")
        x = _as_vector(x, game.n_players)
        total, mass = self._absorbing_part(game, x)
        stay = lam * _survival(x)
        if stay + mass <= 0.0:
            return np.array(game.stay_payoff, dtype=float)
        return (stay * game.stay_payoff + total) / (stay + mass)

    def stationary_deviation_gain(self, game: QuittingGame, x: ProfileLike, i: int) -> float:
        """Best of always-quit and always-continue for player i, minus the profile payoff"""
        x = _as_vector(x, game.n_players)
        current = self.stationary_payoff(game, x)[i]
        return max(
            self.stationary_payoff(game, _with(x, i, 1.0))[i],
            self.stationary_payoff(game, _with(x, i, 0.0))[i],
        ) - current

    def discounted_deviation_gain(self, game: QuittingGame, x: ProfileLike, i: int, lam: float) -> float:
        x = _as_vector(x, game.n_players)
        current = self.discounted_payoff(game, x, lam)[i]
        return max(
            self.discounted_payoff(game, _with(x, i, 1.0), lam)[i],
            self.discounted_payoff(game, _with(x, i, 0.0), lam)[i],
        ) - current

    def _absorbing_part(self, game: QuittingGame, x: np.ndarray) -> Tuple[np.ndarray, float]:
        """Σ_{S≠∅} P(S quits first stage) r^S and its total mass 1 − Π(1 − x_i)"""
        total = np.zeros(game.n_players)
        mass = 0.0
        active = [i for i in range(game.n_players) if x[i] > 0.0]
        for size in range(1, len(active) + 1):
            for coalition in combinations(active, size):
                weight = 1.0
                for i in active:
                    weight *= x[i] if i in coalition else 1.0 - x[i]
                if weight > 0.0:
                    total += weight * game.payoff(coalition)
                    mass += weight
        return total, mass


def _survival(x: np.ndarray) -> float:
    """Π(1 − x_i), accurate for tiny quit probabilities"""
    if np.any(x >= 1.0):
        return 0.0
    return float(np.exp(np.sum(np.log1p(-x))))


def _as_vector(x: ProfileLike, n: int) -> np.ndarray:
    if isinstance(x, StationaryProfile):
        x = x.quit_probs
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"Stationary profile must have length {n}")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("Quit probabilities must lie in [0, 1]")
    return arr


def _with(x: np.ndarray, i: int, value: float) -> np.ndarray:
    y = x.copy()
    y[i] = value
    return y


def _reject_duplicate_keys(pairs):
    result = {}
    for key, value in pairs:
        if key in result:
            raise GameFormatError(f"Duplicate key in game file: {key!r}")
        result[key] = value
    return result


def _read_json(path: Union[str, Path], kind: str) -> Any:
    path = Path(path)
    if not path.exists():
        raise GameFormatError(f"{kind} file not found: {path}")
    try:
        return json.loads(path.read_text(), object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as e:
        raise GameFormatError(f"Malformed {kind.lower()} file {path}: {e}")
