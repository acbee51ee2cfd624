"""
Pydantic models for linear complementarity results
"""
from pydantic import BaseModel, Field
from typing import List, Optional
from enum import Enum


class QMatrixVerdictType(str, Enum):
    """Outcome of a Q-matrix test"""
    Q_CERTIFIED = "Q_certified"
    NOT_Q_WITH_WITNESS = "not_Q_with_witness"
    PROBABLY_Q = "probably_Q"


class QMatrixMethod(str, Enum):
    """How the verdict was reached"""
    DETERMINANT_3X3 = "determinant_3x3"
    CONE_SAMPLING = "cone_sampling"


class LcpSolutionReport(BaseModel):
    """Simplex-form solution (w, z); support lists 1-based indices i with z_i > 0"""
    w: List[float]
    z: List[float]
    support: List[int] = Field(default_factory=list)
    exact_w: Optional[List[str]] = None
    exact_z: Optional[List[str]] = None


class QMatrixVerdict(BaseModel):
    """Q-matrix test result"""
    verdict: QMatrixVerdictType
    witness_q: Optional[List[float]] = Field(
        default=None,
        description="A q for which LCP(R, q) has no solution"
    )
    samples_used: int = Field(0, ge=0)
    method: QMatrixMethod
    determinant: Optional[float] = None
    is_sign_m: Optional[bool] = None
    inverse_positive: Optional[bool] = None


class LcpReport(BaseModel):
    """Answer to a single LCP query"""
    n: int = Field(..., ge=1)
    q: List[float]
    standard_form: bool = False
    solution: Optional[LcpSolutionReport] = None
    solvable: bool


class LcpRequest(BaseModel):
    """Body of POST /lcp/solve"""
    matrix: List[List[float]]
    q: List[float]
    standard_form: bool = False
    exact: bool = False


class QTestRequest(BaseModel):
    """Body of POST /lcp/qtest"""
    matrix: List[List[float]]
    samples: Optional[int] = Field(default=None, ge=1, le=1_000_000)
    seed: Optional[int] = None
