"""
Pydantic models for quitting games, stationary profiles and their reports
"""
from pydantic import BaseModel, Field, field_validator, model_validator
from typing import Dict, List, Optional, Tuple
from enum import Enum


def parse_coalition_key(key: str) -> Tuple[int, ...]:
    """Parse "1,3" into (1, 3); "" denotes the empty coalition."""
    key = key.strip()
    if key == "":
        return ()
    try:
        members = [int(part) for part in key.split(",")]
    except ValueError:
        raise ValueError(f"Invalid coalition key: {key!r}")
    if len(set(members)) != len(members):
        raise ValueError(f"Repeated player in coalition key: {key!r}")
    return tuple(sorted(members))


def format_coalition_key(members) -> str:
    return ",".join(str(m) for m in sorted(members))


class GameFile(BaseModel):
    """Game file format: 1-based players, comma-separated coalition keys"""
    players: int = Field(..., ge=1, le=20, description="Number of players N")
    payoffs: Dict[str, List[float]] = Field(default_factory=dict)
    scale: float = Field(
        default=1.0,
        ge=1.0,
        description="Factor the stored payoffs were divided by"
    )

    @model_validator(mode='after')
    def check_payoff_vectors(self):
        seen = {}
        for key, vector in self.payoffs.items():
            members = parse_coalition_key(key)
            if any(m < 1 or m > self.players for m in members):
                raise ValueError(f"Coalition {key!r} names a player outside 1..{self.players}")
            if members in seen:
                raise ValueError(f"Duplicate coalition: {key!r} and {seen[members]!r}")
            seen[members] = key
            if len(vector) != self.players:
                raise ValueError(
                    f"Payoff for coalition {key!r} has length {len(vector)}, expected {self.players}"
                )
        return self


class MatrixFile(BaseModel):
    """Square matrix stored row-major"""
    matrix: List[List[float]]

    @field_validator('matrix')
    @classmethod
    def check_square(cls, v):
        if not v or any(len(row) != len(v) for row in v):
            raise ValueError('Matrix must be square and non-empty')
        return v


class StationaryProfile(BaseModel):
    """Per-stage quit probability of every player"""
    quit_probs: List[float] = Field(..., min_length=1)

    @field_validator('quit_probs')
    @classmethod
    def check_probabilities(cls, v):
        if any(p < 0.0 or p > 1.0 for p in v):
            raise ValueError('Quit probabilities must lie in [0, 1]')
        return v


class StationaryBranch(str, Enum):
    """Which explicit construction produced a stationary profile"""
    CONTINUE_FOREVER = "continue_forever"
    SINGLE_QUITTER = "single_quitter"
    NONNEGATIVE_QUIT_PAYOFF = "nonnegative_quit_payoff"
    ZERO_LCP = "zero_lcp"
    CANDIDATE = "candidate"


class ClassificationReport(BaseModel):
    """Normal/abnormal split of the players (1-based ids)"""
    chain: List[List[int]]
    normal_set: List[int]
    simon_normal: List[int]
    abnormal: List[int]
    restricted_matrix: List[List[float]]
    warnings: List[str] = Field(default_factory=list)


class DeviationEntry(BaseModel):
    """Best unilateral deviation against a fixed profile"""
    player: int = Field(..., ge=1)
    payoff: float
    gain: float


class StationaryReport(BaseModel):
    """Verification of a stationary profile"""
    branch: Optional[StationaryBranch] = None
    eps: float = Field(..., gt=0.0, description="Requested precision; the bound is a multiple of it")
    eps_used: Optional[float] = Field(default=None, description="Precision the profile was built with after halving")
    bound: float = Field(..., description="Gain bound the profile is checked against")
    profile: StationaryProfile
    payoff: List[float]
    deviations: List[DeviationEntry] = Field(default_factory=list)
    max_gain: float
    passed: bool
    halvings: int = 0


class ClassifyRequest(BaseModel):
    """Body of POST /games/classify"""
    game: GameFile


class StationaryRequest(BaseModel):
    """Body of POST /games/stationary; a candidate switches from construction to verification"""
    game: GameFile
    eps: float = Field(..., gt=0.0, lt=1.0)
    candidate: Optional[List[float]] = None
    continuation: Optional[List[float]] = None
    discount: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
