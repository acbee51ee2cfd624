"""
Exact evaluation, best-response deviation values and Monte Carlo simulation
of kiloblock strategy profiles
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.exceptions import IterationCapExceeded, PreconditionError
from app.models.game import DeviationEntry
from app.models.sunspot import EvaluationReport, SimulationReport, SunspotProfile
from app.services.game_model import QuittingGame

logger = logging.getLogger(__name__)


@dataclass
class ProfileArrays:
    """
    Dense view of a profile.

    `z` is K x (n+1), `p` the per-stage quit probability K x n, `absorb` the
    per-block absorption probability 1 − (1 − p)^C. `successors` is None for a
    profile that plays its kiloblocks in order; otherwise it is K x K and the
    missing mass of each row goes to the tail.
    """
    z: np.ndarray
    p: np.ndarray
    absorb: np.ndarray
    block_len: np.ndarray
    players: np.ndarray
    successors: Optional[np.ndarray]
    initial: np.ndarray

    @property
    def K(self) -> int:
        return self.z.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[1] - 1

    @property
    def linear(self) -> bool:
        return self.successors is None

    @property
    def successor_deficit(self) -> np.ndarray:
        if self.successors is None:
            deficit = np.zeros(self.K)
            deficit[-1] = 1.0
            return deficit
        return np.clip(1.0 - self.successors.sum(axis=1), 0.0, 1.0)

    @property
    def initial_deficit(self) -> float:
        return max(0.0, 1.0 - float(self.initial.sum()))

    @classmethod
    def from_profile(cls, profile: SunspotProfile) -> "ProfileArrays":
        K, n = len(profile.kiloblocks), profile.n
        z = np.empty((K, n + 1))
        p = np.zeros((K, n))
        block_len = np.empty(K, dtype=np.int64)
        shared: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        for k, kb in enumerate(profile.kiloblocks):
            rows = shared.get(id(kb))
            if rows is None:
                rows = (
                    np.asarray(kb.z, dtype=float),
                    np.array([kb.stage_quit_prob(i + 1) for i in range(n)]),
                )
                shared[id(kb)] = rows
            z[k], p[k] = rows
            block_len[k] = kb.block_len

        successors = None
        if any(kb.successors is not None for kb in profile.kiloblocks):
            successors = np.zeros((K, K))
            for k, kb in enumerate(profile.kiloblocks):
                if kb.successors is None:
                    if k + 1 < K:
                        successors[k, k + 1] = 1.0
                    continue
                for key, prob in kb.successors.items():
                    successors[k, int(key)] = prob

        initial = np.zeros(K)
        if profile.initial is None:
            initial[0] = 1.0
        else:
            for key, prob in profile.initial.items():
                initial[int(key)] = prob

        absorb = 1.0 - (1.0 - p) ** block_len[:, None]
        return cls(
            z=z,
            p=p,
            absorb=absorb,
            block_len=block_len,
            players=np.asarray(profile.player_order, dtype=np.int64) - 1,
            successors=successors,
            initial=initial,
        )


class ProfileEvaluator:
    """Values a kiloblock profile exactly and by simulation"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance

    # ---------------------------------------------------------------- exact

    def exact_value(self, profile: SunspotProfile, game: QuittingGame) -> np.ndarray:
        """Expected payoff of every player when all follow the profile"""
        arrays = self._arrays(profile, game)
        quit_payoffs = np.column_stack([game.quit_alone(int(i)) for i in arrays.players])
        return self._solve_chain(arrays, quit_payoffs, np.asarray(game.stay_payoff, dtype=float))

    def termination_probability(self, profile: SunspotProfile) -> float:
        """Probability that somebody quits before play reaches the tail"""
        arrays = ProfileArrays.from_profile(profile)
        value = self._solve_chain(arrays, np.ones((1, arrays.n)), np.zeros(1))
        return float(np.clip(value[0], 0.0, 1.0))

    def _solve_chain(self, arrays: ProfileArrays, quit_payoffs: np.ndarray, tail: np.ndarray) -> np.ndarray:
        """
        U_k = (z_0 Next_k + Σ_i z_i a_i r^i) / (z_0 + Σ_i z_i a_i), a_i the block absorption
        probability; Next_k mixes the successors' U and the tail.
        """
        weighted = arrays.z[:, 1:] * arrays.absorb
        denominator = arrays.z[:, 0] + weighted.sum(axis=1)
        absorbed = weighted @ quit_payoffs.T
        stuck = denominator <= settings.SUPPORT_TOLERANCE
        safe = np.where(stuck, 1.0, denominator)
        deficit = arrays.successor_deficit

        if arrays.linear:
            U = np.empty((arrays.K, len(tail)))
            following = tail
            for k in range(arrays.K - 1, -1, -1):
                if stuck[k]:
                    U[k] = tail
                else:
                    U[k] = (arrays.z[k, 0] * following + absorbed[k]) / safe[k]
                following = U[k]
        else:
            A = (arrays.z[:, 0] / safe)[:, None] * arrays.successors
            A[stuck] = 0.0
            b = ((arrays.z[:, 0] * deficit) / safe)[:, None] * tail[None, :] + absorbed / safe[:, None]
            b[stuck] = tail
            U = np.linalg.solve(np.eye(arrays.K) - A, b)
        return arrays.initial @ U + arrays.initial_deficit * tail

    # ------------------------------------------------------------ deviations

    def deviation_value(self, profile: SunspotProfile, game: QuittingGame, d: int) -> float:
        """
        Best payoff player d (0-based) can secure against the others' profile.

        d observes the public block types and stages. Inside a type-j block it
        compares quitting now with waiting; in its own blocks it controls the
        designated quit.
        """
        arrays = self._arrays(profile, game)
        if not 0 <= d < game.n_players:
            raise PreconditionError(f"Player {d + 1} does not exist")
        alone = float(game.quit_alone(d)[d])
        tail_value = max(alone, float(game.stay_payoff[d]))
        quit_now = np.array([
            float(game.payoff((d, int(P)))[d]) if P != d else alone for P in arrays.players
        ])
        absorbed_pay = np.array([float(game.quit_alone(int(P))[d]) for P in arrays.players])
        deficit = arrays.successor_deficit

        def kiloblock_value(k: int, following: float) -> float:
            return self._kiloblock_value(
                arrays, k, d, following, alone, tail_value, quit_now, absorbed_pay,
            )

        if arrays.linear:
            V = np.empty(arrays.K)
            following = tail_value
            memo: Dict[Tuple[int, float], float] = {}
            row_ids = [id(kb) for kb in profile.kiloblocks]
            for k in range(arrays.K - 1, -1, -1):
                key = (row_ids[k], following)
                value = memo.get(key)
                if value is None:
                    value = kiloblock_value(k, following)
                    memo[key] = value
                V[k] = value
                following = value
        else:
            V = np.full(arrays.K, tail_value)
            for sweep in range(settings.MAX_VALUE_ITERATIONS):
                following = arrays.successors @ V + deficit * tail_value
                updated = np.array([kiloblock_value(k, following[k]) for k in range(arrays.K)])
                change = float(np.max(np.abs(updated - V)))
                V = updated
                if change <= 1e-14:
                    break
            else:
                raise IterationCapExceeded(f"Deviation values of player {d + 1} did not converge")
        return float(arrays.initial @ V + arrays.initial_deficit * tail_value)

    def _kiloblock_value(
        self,
        arrays: ProfileArrays,
        k: int,
        d: int,
        following: float,
        alone: float,
        tail_value: float,
        quit_now: np.ndarray,
        absorbed_pay: np.ndarray,
    ) -> float:
        """Fixed point W = z_0 max(r^d_d, next) + Σ_j z_j Block_j(W), found by Newton's method"""
        z = arrays.z[k]
        C = int(arrays.block_len[k])
        types = [j for j in range(arrays.n) if z[j + 1] > 0.0]
        # nobody else quits in a type-0 stage, so d only weighs quitting alone against moving on
        continue_value = z[0] * max(alone, following)

        def phi(W: float) -> Tuple[float, float]:
            total, slope = continue_value, 0.0
            for j in types:
                if arrays.players[j] == d:
                    value, grad = (W, 1.0) if W > alone else (alone, 0.0)
                else:
                    p = arrays.p[k, j]
                    value, grad = W, 1.0
                    quit = p * quit_now[j] + (1.0 - p) * alone
                    for _ in range(C):
                        wait = p * absorbed_pay[j] + (1.0 - p) * value
                        if quit > wait:
                            value, grad = quit, 0.0
                        else:
                            value, grad = wait, (1.0 - p) * grad
                total += z[j + 1] * value
                slope += z[j + 1] * grad
            return total, slope

        # g(W) = Φ(W) − W is convex and decreasing, so Newton converges monotonically
        W = min(alone, following, float(np.min(absorbed_pay, initial=alone)), float(np.min(quit_now, initial=alone)))
        for _ in range(settings.MAX_NEWTON_ITERATIONS):
            value, slope = phi(W)
            gap = value - W
            if abs(gap) <= 1e-15 * max(1.0, abs(W)):
                return W
            if slope >= 1.0 - 1e-15:
                # play can stay in this kiloblock forever without absorption
                return tail_value
            W = W + gap / (1.0 - slope)
        logger.warning("Newton iteration for kiloblock %d did not settle; residual %.3g", k, gap)
        return W

    def deviation_gain(self, profile: SunspotProfile, game: QuittingGame, i: int) -> float:
        """Best deviation payoff of player i (0-based) minus its value under the profile"""
        return self.deviation_value(profile, game, i) - float(self.exact_value(profile, game)[i])

    def deviation_gains(self, profile: SunspotProfile, game: QuittingGame) -> List[DeviationEntry]:
        value = self.exact_value(profile, game)
        entries = []
        for d in range(game.n_players):
            best = self.deviation_value(profile, game, d)
            entries.append(DeviationEntry(player=d + 1, payoff=best, gain=best - float(value[d])))
        return entries

    # ---------------------------------------------------------- verification

    def verify_sunspot(
        self,
        profile: SunspotProfile,
        game: QuittingGame,
        eps: float,
        anchor_value: Optional[np.ndarray] = None,
        envelope: Optional[float] = None,
    ) -> EvaluationReport:
        """
        Check that no player gains more than envelope·ε and that play ends with
        probability at least 1 − ε

        Args:
            profile: kiloblock profile
            game: normalized game the profile was built for
            eps: precision
            anchor_value: w(y^K) lifted to all players; when given, the exact
                value of each normal player must lie within 2ε of it
            envelope: multiple of ε allowed as gain

        Returns:
            EvaluationReport
        """
        if not 0.0 < eps < 1.0:
            raise PreconditionError("eps must lie in (0, 1)")
        envelope = settings.ACCEPTANCE_ENVELOPE if envelope is None else envelope
        value = self.exact_value(profile, game)
        deviations = self.deviation_gains(profile, game)
        max_gain = max(entry.gain for entry in deviations)
        termination = self.termination_probability(profile)
        bound = envelope * eps

        failures = []
        if max_gain > bound + self.tolerance:
            failures.append("deviation")
        if termination < 1.0 - eps - self.tolerance:
            failures.append("termination")

        value_gap = None
        anchor = None
        if anchor_value is not None:
            anchor = np.asarray(anchor_value, dtype=float)
            normal = np.asarray(profile.player_order) - 1
            value_gap = float(np.max(np.abs(value[normal] - anchor[normal])))
            if value_gap >= 2.0 * eps:
                failures.append("value")

        report = EvaluationReport(
            exact_value=value.tolist(),
            deviations=deviations,
            max_gain=max_gain,
            termination_prob=termination,
            anchor_value=None if anchor is None else anchor.tolist(),
            value_gap=value_gap,
            megablock_quit_prob=self.megablock_quit_prob(profile, eps),
            eps=eps,
            envelope=envelope,
            bound=bound,
            passed=not failures,
            failures=failures,
        )
        logger.info("sunspot profile: max gain %.3g (bound %.3g), termination %.6f", max_gain, bound, termination)
        return report

    def megablock_quit_prob(self, profile: SunspotProfile, eps: float) -> Optional[float]:
        """
        Group consecutive kiloblocks until play ends with probability 1 − ε inside
        the group; return the smallest, over groups, of the second-largest
        per-player quit probability
        """
        arrays = ProfileArrays.from_profile(profile)
        if not arrays.linear or arrays.n < 2:
            return None
        weighted = arrays.z[:, 1:] * arrays.absorb
        denominator = arrays.z[:, 0] + weighted.sum(axis=1)
        safe = np.where(denominator <= settings.SUPPORT_TOLERANCE, 1.0, denominator)
        ends = weighted / safe[:, None]
        moves = arrays.z[:, 0] / safe

        best: Optional[float] = None
        survival = 1.0
        mass = np.zeros(arrays.n)
        for k in range(arrays.K):
            mass += survival * ends[k]
            survival *= moves[k]
            if survival <= eps:
                second = float(np.sort(mass)[-2])
                best = second if best is None else min(best, second)
                survival = 1.0
                mass[:] = 0.0
        return best

    # ------------------------------------------------------------ simulation

    def simulate(
        self,
        profile: SunspotProfile,
        game: QuittingGame,
        seed: Optional[int] = None,
        runs: Optional[int] = None,
        max_rounds: int = 1_000_000,
    ) -> SimulationReport:
        """Monte Carlo estimate of the profile's payoff; seeded runs are reproducible"""
        seed = settings.SIMULATION_SEED if seed is None else seed
        runs = settings.SIMULATION_RUNS if runs is None else runs
        if runs < 1:
            raise PreconditionError("runs must be positive")
        arrays = self._arrays(profile, game)
        rng = np.random.default_rng(seed)

        cumulative_z = np.cumsum(arrays.z, axis=1)
        start_weights = np.append(arrays.initial, arrays.initial_deficit)
        start = _draw(rng, np.cumsum(start_weights)[None, :].repeat(runs, axis=0))
        state = np.where(start >= arrays.K, -1, start)
        if arrays.successors is not None:
            cumulative_succ = np.cumsum(
                np.hstack([arrays.successors, arrays.successor_deficit[:, None]]), axis=1
            )

        stage = np.zeros(runs, dtype=np.int64)
        outcome = np.full(runs, -1, dtype=np.int64)
        alive = state >= 0

        for _ in range(max_rounds):
            active = np.flatnonzero(alive)
            if active.size == 0:
                break
            k = state[active]
            kind = _draw(rng, cumulative_z[k])
            C = arrays.block_len[k]

            leave = kind == 0
            movers = active[leave]
            if movers.size:
                stage[movers] += C[leave]
                if arrays.linear:
                    nxt = state[movers] + 1
                    nxt[nxt >= arrays.K] = -1
                else:
                    nxt = _draw(rng, cumulative_succ[state[movers]])
                    nxt[nxt >= arrays.K] = -1
                state[movers] = nxt
                alive[movers[nxt < 0]] = False

            blocks = active[~leave]
            if blocks.size:
                j = kind[~leave] - 1
                p = arrays.p[state[blocks], j]
                positive = p > 0.0
                wait = np.full(blocks.size, np.iinfo(np.int64).max)
                wait[positive] = rng.geometric(p[positive])
                C_blocks = C[~leave]
                quits = wait <= C_blocks
                quitters = blocks[quits]
                stage[quitters] += wait[quits]
                outcome[quitters] = j[quits]
                alive[quitters] = False
                stage[blocks[~quits]] += C_blocks[~quits]
        else:
            logger.warning("simulation stopped after %d rounds with %d runs still playing", max_rounds, alive.sum())

        quit_payoffs = np.column_stack([game.quit_alone(int(i)) for i in arrays.players])
        stay = np.asarray(game.stay_payoff, dtype=float)
        absorbed = outcome >= 0
        payoffs = np.tile(stay, (runs, 1))
        payoffs[absorbed] = quit_payoffs[:, outcome[absorbed]].T

        truncated = int((~absorbed).sum())
        if runs > 1:
            standard_error = payoffs.std(axis=0, ddof=1) / np.sqrt(runs)
        else:
            standard_error = np.zeros(game.n_players)

        labels = pd.Series(
            np.where(absorbed, (arrays.players[np.maximum(outcome, 0)] + 1).astype(str), "tail")
        )
        buckets = pd.Series([_stage_bucket(int(s)) for s in stage[absorbed]], dtype=object)
        return SimulationReport(
            runs=runs,
            seed=seed,
            mean=payoffs.mean(axis=0).tolist(),
            standard_error=standard_error.tolist(),
            truncated=truncated,
            stage_histogram={str(key): int(count) for key, count in buckets.value_counts(sort=False).items()},
            outcomes={str(key): int(count) for key, count in labels.value_counts().sort_index().items()},
        )

    # --------------------------------------------------------------- helpers

    def _arrays(self, profile: SunspotProfile, game: QuittingGame) -> ProfileArrays:
        if profile.n_players != game.n_players:
            raise PreconditionError(
                f"Profile is for {profile.n_players} players, game has {game.n_players}"
            )
        return ProfileArrays.from_profile(profile)


def _draw(rng: np.random.Generator, cumulative: np.ndarray) -> np.ndarray:
    """One categorical draw per row of a cumulative weight matrix"""
    u = rng.random(cumulative.shape[0]) * cumulative[:, -1]
    return (u[:, None] >= cumulative).sum(axis=1)


def _stage_bucket(stage: int) -> str:
    """Power-of-two bucket label: 1, 2-3, 4-7, ..."""
    low = 1 << (max(stage, 1).bit_length() - 1)
    high = 2 * low - 1
    return str(low) if low == high else f"{low}-{high}"
