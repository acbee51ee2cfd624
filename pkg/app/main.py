"""
Quitting Games Equilibrium Backend
Stationary and sunspot ε-equilibria of multiplayer quitting games
"""
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import uvicorn

from app.api.routes import games, health, lcp, sunspot
from app.core.config import settings
from app.core.logging import setup_logging

setup_logging(settings.LOG_LEVEL)

# Create FastAPI instance
app = FastAPI(
    title=settings.APP_NAME,
    description="Stationary and sunspot ε-equilibria of multiplayer quitting games",
    version=settings.VERSION,
    docs_url="/docs",
    redoc_url="/redoc"
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.ALLOWED_HOSTS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(health.router, prefix="/api/v1", tags=["Health"])
app.include_router(games.router, prefix="/api/v1", tags=["Games"])
app.include_router(lcp.router, prefix="/api/v1", tags=["LCP"])
app.include_router(sunspot.router, prefix="/api/v1", tags=["Sunspot"])


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": f"Welcome to {settings.APP_NAME}",
        "description": "Stationary and sunspot ε-equilibria of multiplayer quitting games",
        "version": settings.VERSION,
        "docs": "/docs",
        "health": "/api/v1/health"
    }

if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG
    )
