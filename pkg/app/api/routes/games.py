"""
Game classification and stationary equilibrium endpoints
"""
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from app.core.exceptions import GameFormatError, PreconditionError, SingularMatrixError
from app.models.game import ClassificationReport, ClassifyRequest, StationaryReport, StationaryRequest
from app.services.equilibrium import EquilibriumService
from app.services.stationary import StationaryConstructor

router = APIRouter()

# Initialize services
equilibrium_service = EquilibriumService()
stationary_constructor = StationaryConstructor()


@router.post("/games/classify", response_model=ClassificationReport)
async def classify_game(request: ClassifyRequest):
    """
    Split the players into normal and abnormal and return R̂
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        _, cls = equilibrium_service.prepare(game)
        return cls.to_report(game.warnings)
    except (GameFormatError, PreconditionError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Classification failed: {str(e)}")


@router.post("/games/stationary", response_model=StationaryReport)
async def stationary_equilibrium(request: StationaryRequest):
    """
    Construct a stationary ε-equilibrium, or verify a candidate profile
    """
    try:
        game = equilibrium_service.games.parse_game(request.game.model_dump())
        if request.candidate is not None:
            return await run_in_threadpool(
                stationary_constructor.verify_candidate,
                game,
                request.candidate,
                request.eps,
                request.continuation,
                request.discount,
            )
        return await run_in_threadpool(stationary_constructor.construct_stationary, game, request.eps)
    except (GameFormatError, PreconditionError, SingularMatrixError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Stationary construction failed: {str(e)}")
