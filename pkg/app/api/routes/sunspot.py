"""
Sunspot equilibrium endpoints: building blocks, construction, verification, simulation
"""
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.core.exceptions import (
    BlockConstructionError,
    GameFormatError,
    IterationCapExceeded,
    PreconditionError,
    SingularMatrixError,
)
from app.models.sunspot import (
    BlockReport,
    BlockRequest,
    EvaluationReport,
    SimulateRequest,
    SimulationReport,
    SunspotReport,
    SunspotRequest,
    VerifyRequest,
)
from app.services.equilibrium import EquilibriumService

router = APIRouter()

equilibrium_service = EquilibriumService()

INPUT_ERRORS = (GameFormatError, PreconditionError, SingularMatrixError)


@router.post("/sunspot/block", response_model=BlockReport, response_model_by_alias=True)
async def building_block(request: BlockRequest):
    """
    Build and check the block at an anchor y ∈ ∂D
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        return await run_in_threadpool(equilibrium_service.build_block, game, request.y, request.eps)
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except BlockConstructionError as e:
        raise HTTPException(status_code=422, detail={"message": str(e), "failed": e.failed_conditions})
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Block construction failed: {str(e)}")


@router.post("/sunspot/construct", response_model=SunspotReport, response_model_by_alias=True)
async def construct_sunspot(request: SunspotRequest):
    """
    Construct and verify a sunspot ε-equilibrium
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        return await run_in_threadpool(
            equilibrium_service.run_sunspot, game, request.eps, request.target, request.start
        )
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except IterationCapExceeded as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Sunspot construction failed: {str(e)}")


@router.post("/sunspot/verify", response_model=EvaluationReport)
async def verify_profile(request: VerifyRequest):
    """
    Exact value, deviation gains and termination of a kiloblock profile
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        return await run_in_threadpool(equilibrium_service.verify_profile, game, request.profile, request.eps)
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Verification failed: {str(e)}")


@router.post("/sunspot/simulate", response_model=SimulationReport)
async def simulate_profile(request: SimulateRequest):
    """
    Monte Carlo estimate of a kiloblock profile's payoff
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        return await run_in_threadpool(
            equilibrium_service.simulate, game, request.profile, request.seed, request.runs
        )
    except INPUT_ERRORS as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Simulation failed: {str(e)}")
