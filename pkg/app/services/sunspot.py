"""
Anchor sequences on ∂D and their assembly into a kiloblock strategy profile
"""
import logging
from collections import deque
from dataclasses import dataclass, field
from math import comb, floor, log1p
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import FixedPointDetected, IterationCapExceeded, PreconditionError
from app.models.sunspot import Kiloblock, SequenceReport, SunspotProfile
from app.services.building_block import BlockBuilder, BuildingBlock
from app.services.classification import Classification
from app.services.geometry import FeasibleSetD
from app.services.lcp_solver import LcpSolver

logger = logging.getLogger(__name__)

Vector = np.ndarray


def sup_distance(a: Vector, b: Vector) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0))


def block_length(intensities: Sequence[float], eps: float) -> int:
    """Smallest C ≥ 1 with 1 − (1 − λ)^(1/C) < ε for every λ"""
    length = 1
    for lam in intensities:
        if lam <= 0.0:
            continue
        if lam >= 1.0:
            raise PreconditionError("Quit intensity 1 cannot be spread over a finite block")
        ratio = log1p(-lam) / log1p(-eps)
        candidate = max(1, floor(ratio) + 1)
        while 1.0 - (1.0 - lam) ** (1.0 / candidate) >= eps:
            candidate += 1
        length = max(length, candidate)
    return length


@dataclass
class Orbit:
    """Approximate orbit x^1, ..., x^K of a map without fixed points"""
    points: List[Vector] = field(default_factory=list)
    images: List[Vector] = field(default_factory=list)
    drifts: List[float] = field(default_factory=list)
    jumps: List[float] = field(default_factory=list)
    limit_jumps: int = 0
    cycle_length: Optional[int] = None
    drift_sum: float = 0.0
    jump_total: float = 0.0

    @property
    def jump_sum(self) -> float:
        """Jumps between stored points; a trailing jump to a not-yet-stored point is excluded"""
        if self.jumps and len(self.jumps) >= len(self.points):
            return self.jump_total - self.jumps[-1]
        return self.jump_total

    def add_point(self, x: Vector, fx: Vector, drift: float) -> None:
        self.points.append(x)
        self.images.append(fx)
        self.drifts.append(drift)
        self.drift_sum += drift

    def add_jump(self, cost: float) -> None:
        self.jumps.append(cost)
        self.jump_total += cost


def approximate_orbit(
    f: Callable[[Vector], Vector],
    x0: Vector,
    C: float,
    c: float,
    snap: Callable[[Vector], Vector] = lambda x: x,
    max_steps: Optional[int] = None,
) -> Orbit:
    """
    Iterate x ↦ f(x) until Σ ‖x^k − f(x^k)‖ > C while keeping Σ ‖x^{k+1} − f(x^k)‖ < c.

    When the iteration becomes Cauchy (a window of small drifts, or a single
    drift below the fixed-point tolerance), play continues from the
    extrapolated limit and the distance to f(x^k) is charged to the jump
    budget. Exact cycles are unrolled without calling f again.

    Raises:
        FixedPointDetected: ‖x − f(x)‖ stays below tolerance for several
            consecutive steps, limit jumps included
        IterationCapExceeded: step cap hit or jump budget exhausted
    """
    max_steps = settings.MAX_SEQUENCE_STEPS if max_steps is None else max_steps
    orbit = Orbit()
    seen: Dict[tuple, int] = {}
    window: deque = deque(maxlen=settings.CAUCHY_WINDOW)
    recent: deque = deque(maxlen=3)
    stalled = 0
    x = snap(np.asarray(x0, dtype=float))

    while orbit.drift_sum <= C:
        if len(orbit.points) >= max_steps:
            raise IterationCapExceeded(f"No approximate orbit within {max_steps} steps")

        key = tuple(np.round(x, settings.LIMIT_DIGITS))
        if key in seen:
            _unroll_cycle(orbit, seen[key], C, c)
            break
        seen[key] = len(orbit.points)

        fx = f(x)
        drift = sup_distance(x, fx)
        stalled = stalled + 1 if drift < settings.FIXED_POINT_TOLERANCE else 0
        if stalled > settings.FIXED_POINT_PATIENCE:
            raise FixedPointDetected(f"Map has a fixed point near {np.asarray(x).tolist()}")
        orbit.add_point(x, fx, drift)
        if orbit.drift_sum > C:
            break

        window.append(drift)
        recent.append(x)
        nxt = snap(fx)
        cauchy = len(window) == window.maxlen and sum(window) < settings.CAUCHY_TOLERANCE
        if len(recent) == recent.maxlen and (cauchy or stalled):
            limit = snap(np.round(_extrapolate(list(recent) + [fx]), settings.LIMIT_DIGITS))
            cost = sup_distance(limit, fx)
            if orbit.jump_total + cost >= c:
                raise IterationCapExceeded("Limit jumps exhaust the jump budget")
            logger.warning("orbit is Cauchy after %d steps; jumping to its limit", len(orbit.points))
            orbit.limit_jumps += 1
            nxt = limit
            window.clear()
            recent.clear()
        orbit.add_jump(sup_distance(nxt, fx))
        if orbit.jump_total >= c:
            raise IterationCapExceeded("Jump budget exhausted")
        x = nxt
    return orbit


def _unroll_cycle(orbit: Orbit, start: int, C: float, c: float) -> None:
    """Repeat points[start:] until the drift target is passed"""
    period = len(orbit.points) - start
    cycle_drift = float(sum(orbit.drifts[start:]))
    cycle_jump = float(sum(orbit.jumps[start:]))
    if cycle_drift < settings.FIXED_POINT_TOLERANCE:
        raise FixedPointDetected("Orbit cycles without drift")
    orbit.cycle_length = period
    logger.info("orbit enters a %d-cycle with drift %.6g per turn", period, cycle_drift)

    offset = 0
    while orbit.drift_sum <= C:
        if len(orbit.points) >= settings.MAX_SEQUENCE_STEPS:
            raise IterationCapExceeded("Cycle unrolling exceeds the step cap")
        k = start + offset % period
        orbit.add_point(orbit.points[k], orbit.images[k], orbit.drifts[k])
        orbit.add_jump(orbit.jumps[k])
        offset += 1
    if cycle_jump > 0.0 and orbit.jump_sum >= c:
        raise IterationCapExceeded("Cycle jumps exhaust the jump budget")


def _extrapolate(history: List[Vector]) -> Vector:
    """Aitken's Δ² on the last three iterates, coordinatewise"""
    if len(history) < 3:
        return np.asarray(history[-1], dtype=float)
    x0, x1, x2 = (np.asarray(v, dtype=float) for v in history[-3:])
    d1 = x1 - x0
    d2 = x2 - x1
    curvature = d2 - d1
    limit = x2.copy()
    ok = np.abs(curvature) > 1e-300
    limit[ok] = x2[ok] - d2[ok] ** 2 / curvature[ok]
    return limit


@dataclass
class AnchorSequence:
    """y^1, ..., y^K on ∂D with their building blocks"""
    points: List[Vector]
    blocks: List[BuildingBlock]
    drift_sum: float
    jump_sum: float
    C_target: float
    c_target: float
    limit_jumps: int = 0
    cycle_length: Optional[int] = None

    @property
    def length(self) -> int:
        return len(self.points)

    def satisfies_targets(self) -> bool:
        return self.drift_sum > self.C_target and self.jump_sum < self.c_target

    def to_report(self) -> SequenceReport:
        return SequenceReport(
            length=self.length,
            drift_sum=self.drift_sum,
            jump_sum=self.jump_sum,
            C_target=self.C_target,
            c_target=self.c_target,
            limit_jumps=self.limit_jumps,
            cycle_length=self.cycle_length,
            start=self.points[0].tolist(),
            last=self.points[-1].tolist(),
        )


class SunspotConstructor:
    """Runs the block map along ∂D and turns the result into a profile"""

    def __init__(self, tolerance: Optional[float] = None):
        self.tolerance = settings.TOLERANCE if tolerance is None else tolerance
        self.solver = LcpSolver(self.tolerance)

    def drift_target(self, n: int, eps: float) -> float:
        return comb(n, 2) * 2.0 * (1.0 + eps) / eps ** 2

    def generate_sequence(
        self,
        cls: Classification,
        D: FeasibleSetD,
        eps: float,
        start: Optional[Sequence[float]] = None,
        builder: Optional[BlockBuilder] = None,
    ) -> AnchorSequence:
        """
        Anchor sequence with drift above C(n,2)·2(1+ε)/ε² and total jump below ε

        Args:
            cls: classification of a normalized game
            D: feasible set of its restricted matrix
            eps: precision in (0, 1)
            start: first anchor; defaults to the lexicographically smallest point of D
            builder: block builder to reuse (its cache carries over)

        Returns:
            AnchorSequence whose blocks all pass the block checker
        """
        if not 0.0 < eps < 1.0:
            raise PreconditionError("eps must lie in (0, 1)")
        if cls.n == 0:
            raise PreconditionError("No normal players; use the stationary construction")
        if self.solver.nontrivial_zero_solution(cls.restricted) is not None:
            raise PreconditionError("LCP(R̂, 0) has a nontrivial solution; use the stationary construction")
        if D.is_empty():
            raise PreconditionError("D is empty")
        if any(np.min(cls.restricted[:, i]) >= -eps for i in range(cls.n)):
            logger.warning("eps=%g is not below every column's most negative entry", eps)

        builder = BlockBuilder(D, self.tolerance) if builder is None else builder
        y0 = D.lexicographic_start() if start is None else D.snap(start)
        C = self.drift_target(cls.n, eps)
        orbit = approximate_orbit(
            lambda y: builder.build_block(y, eps).w,
            y0,
            C=C,
            c=eps,
            snap=D.snap,
        )
        blocks = [builder.build_block(y, eps) for y in orbit.points]
        logger.info(
            "anchor sequence: %d points, drift %.6g (target %.6g), jumps %.3g",
            len(orbit.points), orbit.drift_sum, C, orbit.jump_sum,
        )
        return AnchorSequence(
            points=orbit.points,
            blocks=blocks,
            drift_sum=orbit.drift_sum,
            jump_sum=orbit.jump_sum,
            C_target=C,
            c_target=eps,
            limit_jumps=orbit.limit_jumps,
            cycle_length=orbit.cycle_length,
        )

    def assemble_profile(self, seq: AnchorSequence, cls: Classification, eps: float) -> SunspotProfile:
        """Kiloblock k plays the block of anchor y^{K−k+1}"""
        if not seq.satisfies_targets():
            raise PreconditionError("Anchor sequence misses its drift or jump target")
        shared: Dict[int, Kiloblock] = {}
        kiloblocks = []
        for block in reversed(seq.blocks):
            # cycles reuse block objects, so kiloblocks can be shared too
            kiloblock = shared.get(id(block))
            if kiloblock is None:
                kiloblock = self.kiloblock_for(block, eps)
                shared[id(block)] = kiloblock
            kiloblocks.append(kiloblock)
        return SunspotProfile(
            kiloblocks=kiloblocks,
            player_order=[p + 1 for p in cls.player_order],
            n_players=cls.n_players,
            eps=eps,
        )

    def kiloblock_for(self, block: BuildingBlock, eps: float) -> Kiloblock:
        support = block.support()
        intensities = {str(i + 1): float(block.lam[i]) for i in support}
        return Kiloblock(
            z=block.z.tolist(),
            lambda_=intensities,
            block_len=block_length(intensities.values(), eps),
        )
