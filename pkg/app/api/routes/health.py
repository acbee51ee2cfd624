"""
Health check endpoints
"""
from fastapi import APIRouter
from datetime import datetime
import psutil
import platform

import numpy
import scipy
import sympy

from app.core.config import settings

router = APIRouter()


@router.get("/health")
async def health_check():
    """Basic health check endpoint"""
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "service": settings.APP_NAME,
        "version": settings.VERSION
    }


@router.get("/health/detailed")
async def detailed_health_check():
    """Detailed health check with system and numerical stack information"""
    try:
        memory = psutil.virtual_memory()

        return {
            "status": "healthy",
            "timestamp": datetime.now().isoformat(),
            "service": settings.APP_NAME,
            "version": settings.VERSION,
            "system": {
                "platform": platform.system(),
                "python_version": platform.python_version(),
                "cpu_count": psutil.cpu_count(),
                "memory": {
                    "total": memory.total,
                    "available": memory.available,
                    "percent": memory.percent
                }
            },
            "numerics": {
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
                "sympy": sympy.__version__,
                "tolerance": settings.TOLERANCE,
                "acceptance_envelope": settings.ACCEPTANCE_ENVELOPE
            }
        }
    except Exception as e:
        return {
            "status": "healthy",
            "timestamp": datetime.now().isoformat(),
            "service": settings.APP_NAME,
            "version": settings.VERSION,
            "note": "Basic health check only",
            "error": str(e)
        }
