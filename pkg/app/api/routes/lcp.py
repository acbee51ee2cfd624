"""
Linear complementarity endpoints
"""
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.core.exceptions import GameFormatError, PreconditionError, SingularMatrixError
from app.models.lcp import LcpReport, LcpRequest, QMatrixVerdict, QTestRequest
from app.models.sunspot import MMatrixReport, MMatrixRequest
from app.services.equilibrium import EquilibriumService

router = APIRouter()

equilibrium_service = EquilibriumService()


@router.post("/lcp/solve", response_model=LcpReport)
async def solve_lcp(request: LcpRequest):
    """
    Solve LCP(R, q) in simplex form
    """
    try:
        return await run_in_threadpool(
            equilibrium_service.solve_lcp, request.matrix, request.q, request.standard_form, request.exact
        )
    except (PreconditionError, SingularMatrixError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"LCP solve failed: {str(e)}")


@router.post("/lcp/qtest", response_model=QMatrixVerdict)
async def q_matrix_test(request: QTestRequest):
    """
    Decide or estimate whether a matrix is a Q-matrix
    """
    try:
        return await run_in_threadpool(
            equilibrium_service.q_matrix_test, request.matrix, request.samples, request.seed
        )
    except (PreconditionError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Q-matrix test failed: {str(e)}")


@router.post("/lcp/mmatrix", response_model=MMatrixReport)
async def m_matrix_targets(request: MMatrixRequest):
    """
    Unit-direction targets of a game whose R̂ is an M-matrix
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        _, cls = equilibrium_service.prepare(game)
        return await run_in_threadpool(equilibrium_service.m_matrix.report, cls, request.exact)
    except (GameFormatError, PreconditionError, SingularMatrixError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"M-matrix analysis failed: {str(e)}")
