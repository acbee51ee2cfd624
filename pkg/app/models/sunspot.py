"""
Pydantic models for building blocks, sunspot profiles and their evaluation
"""
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Dict, List, Literal, Optional
from enum import Enum

from app.models.game import DeviationEntry, GameFile


class BlockCase(str, Enum):
    """How a building block was obtained"""
    FACE_POINT = "face_point"
    CONVERGING_PERTURBATION = "converging_perturbation"
    SINGLE_DIRECTION = "single_direction"
    SIMPLEX_SECTION = "simplex_section"
    GENERIC = "generic"
    SUPPLIED = "supplied"


class BlockReport(BaseModel):
    """A building block with its per-condition check"""
    model_config = ConfigDict(populate_by_name=True)

    y: List[float]
    w: List[float]
    w_i: List[List[float]] = Field(..., description="Row i is w^i")
    z: List[float]
    lambda_: List[float] = Field(..., alias="lambda")
    case: BlockCase
    eps: float = Field(..., gt=0.0, lt=1.0)
    drift: float = Field(..., ge=0.0, description="Sup-norm distance between y and w")
    conditions: Dict[str, bool] = Field(default_factory=dict)
    residuals: Dict[str, float] = Field(default_factory=dict)
    passed: bool


class Kiloblock(BaseModel):
    """
    One kiloblock: nature draws block types from z (type 0 ends the kiloblock),
    a type-i block lasts block_len stages during which normal player i quits
    with per-stage probability 1 − (1 − λ_i)^(1/block_len)
    """
    model_config = ConfigDict(populate_by_name=True)

    z: List[float] = Field(..., min_length=2)
    lambda_: Dict[str, float] = Field(default_factory=dict, alias="lambda")
    block_len: int = Field(..., ge=1)
    successors: Optional[Dict[str, float]] = Field(
        default=None,
        description="Distribution of the next kiloblock (0-based index); None continues in order"
    )

    @field_validator('z')
    @classmethod
    def check_distribution(cls, v):
        if any(p < -1e-12 for p in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError('z must be a probability vector')
        return v

    @field_validator('lambda_')
    @classmethod
    def check_intensities(cls, v):
        if any(lam < 0.0 or lam >= 1.0 for lam in v.values()):
            raise ValueError('Quit intensities must lie in [0, 1)')
        return v

    def intensity(self, i: int) -> float:
        """λ of normal player i (1-based)"""
        return self.lambda_.get(str(i), 0.0)

    def stage_quit_prob(self, i: int) -> float:
        lam = self.intensity(i)
        return 1.0 - (1.0 - lam) ** (1.0 / self.block_len)


class SunspotProfile(BaseModel):
    """Finite description of the kiloblock strategy profile"""
    kiloblocks: List[Kiloblock] = Field(..., min_length=1)
    initial: Optional[Dict[str, float]] = Field(
        default=None,
        description="Nature's distribution over the first kiloblock; None starts at kiloblock 0"
    )
    tail: Literal["continue"] = "continue"
    player_order: List[int] = Field(..., min_length=1, description="Original 1-based id of each normal player")
    n_players: int = Field(..., ge=1)
    eps: Optional[float] = None

    @model_validator(mode='after')
    def check_shapes(self):
        n = len(self.player_order)
        K = len(self.kiloblocks)
        for k, block in enumerate(self.kiloblocks):
            if len(block.z) != n + 1:
                raise ValueError(f"Kiloblock {k} has {len(block.z)} type weights, expected {n + 1}")
            for key in block.lambda_:
                if not key.isdigit() or not 1 <= int(key) <= n:
                    raise ValueError(f"Kiloblock {k} names unknown normal player {key!r}")
            for key in (block.successors or {}):
                if not key.isdigit() or int(key) >= K:
                    raise ValueError(f"Kiloblock {k} names unknown successor {key!r}")
        for key in (self.initial or {}):
            if not key.isdigit() or int(key) >= K:
                raise ValueError(f"Initial distribution names unknown kiloblock {key!r}")
        if any(p < 1 or p > self.n_players for p in self.player_order):
            raise ValueError("player_order names a player outside the game")
        return self

    @property
    def n(self) -> int:
        return len(self.player_order)


class SequenceReport(BaseModel):
    """Anchor sequence summary"""
    length: int = Field(..., ge=1)
    drift_sum: float
    jump_sum: float
    C_target: float
    c_target: float
    limit_jumps: int = 0
    cycle_length: Optional[int] = None
    start: List[float]
    last: List[float]


class EvaluationReport(BaseModel):
    """Exact value, deviation gains and termination of a sunspot profile"""
    exact_value: List[float]
    deviations: List[DeviationEntry] = Field(default_factory=list)
    max_gain: float
    termination_prob: float = Field(..., ge=0.0, le=1.0)
    anchor_value: Optional[List[float]] = None
    value_gap: Optional[float] = None
    megablock_quit_prob: Optional[float] = None
    eps: float
    envelope: float
    bound: float
    passed: bool
    failures: List[str] = Field(default_factory=list)


class SimulationReport(BaseModel):
    """Monte Carlo estimate of a sunspot profile's payoff"""
    runs: int = Field(..., ge=1)
    seed: int
    mean: List[float]
    standard_error: List[float]
    truncated: int = Field(0, ge=0, description="Runs that reached the tail without absorption")
    stage_histogram: Dict[str, int] = Field(default_factory=dict)
    outcomes: Dict[str, int] = Field(default_factory=dict)


class MMatrixTarget(BaseModel):
    """Unit-direction target w^i and its decomposition (normal indices are 1-based)"""
    player: int = Field(..., ge=1)
    w: List[float]
    lam: List[float]
    alpha: float = Field(..., gt=0.0, lt=1.0)
    j: int = Field(..., ge=1)
    y: List[float]
    beta: List[float]


class MMatrixReport(BaseModel):
    """Targets of the inverse-positive path with their condition check"""
    targets: List[MMatrixTarget]
    conditions: Dict[str, bool] = Field(default_factory=dict)
    passed: bool


class SunspotPath(str, Enum):
    """Which construction produced a sunspot profile"""
    ANCHOR_SEQUENCE = "anchor_sequence"
    M_MATRIX = "m_matrix"


class SunspotReport(BaseModel):
    """Outcome of the sunspot pipeline"""
    path: SunspotPath
    eps: float = Field(..., gt=0.0, lt=1.0)
    halvings: int = 0
    sequence: Optional[SequenceReport] = None
    m_matrix: Optional[MMatrixReport] = None
    evaluation: EvaluationReport
    profile: SunspotProfile


class MMatrixRequest(BaseModel):
    """Body of POST /lcp/mmatrix"""
    game: GameFile
    exact: bool = False


class BlockRequest(BaseModel):
    """Body of POST /sunspot/block"""
    game: GameFile
    y: List[float]
    eps: float = Field(..., gt=0.0, lt=1.0)


class SunspotRequest(BaseModel):
    """Body of POST /sunspot/construct"""
    game: GameFile
    eps: float = Field(..., gt=0.0, lt=1.0)
    target: Optional[List[float]] = None
    start: Optional[List[float]] = None


class VerifyRequest(BaseModel):
    """Body of POST /sunspot/verify"""
    game: GameFile
    profile: SunspotProfile
    eps: float = Field(..., gt=0.0, lt=1.0)


class SimulateRequest(BaseModel):
    """Body of POST /sunspot/simulate"""
    game: GameFile
    profile: SunspotProfile
    seed: Optional[int] = None
    runs: Optional[int] = Field(default=None, ge=1, le=1_000_000)
