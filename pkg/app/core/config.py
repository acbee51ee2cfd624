"""
Core configuration settings for the Quitting Games Equilibrium backend
"""
from pydantic_settings import BaseSettings
from pydantic import field_validator
from typing import List

class Settings(BaseSettings):
    """Application settings"""

    # App configuration
    APP_NAME: str = "Quitting Games Equilibrium Backend"
    VERSION: str = "1.0.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Server configuration
    HOST: str = "0.0.0.0"
    PORT: int = 8000

    # CORS settings
    ALLOWED_HOSTS: List[str] = ["*"]

    @field_validator('ALLOWED_HOSTS', mode='before')
    @classmethod
    def parse_allowed_hosts(cls, v):
        if isinstance(v, str):
            return [host.strip() for host in v.split(',')]
        return v

    # Numerical tolerances
    TOLERANCE: float = 1e-9
    SUPPORT_TOLERANCE: float = 1e-12
    CLASSIFY_SLACK: float = 1e-12
    FIXED_POINT_TOLERANCE: float = 1e-10
    CAUCHY_TOLERANCE: float = 1e-7
    CAUCHY_WINDOW: int = 50
    FIXED_POINT_PATIENCE: int = 5
    LIMIT_DIGITS: int = 12
    SNAP_SLACK: float = 1e-6
    SINGULAR_PERTURBATION: float = 1e-10

    # Search schedules
    EPS_HALVING_RETRIES: int = 20
    LIMIT_HALVING_CAP: int = 40
    MAX_SEQUENCE_STEPS: int = 10_000_000
    MAX_NEWTON_ITERATIONS: int = 200
    MAX_VALUE_ITERATIONS: int = 1_000_000

    # Q-matrix sampling
    QTEST_SAMPLES: int = 10_000
    QTEST_SEED: int = 0

    # Simulation
    SIMULATION_RUNS: int = 100_000
    SIMULATION_SEED: int = 0

    # Verification and reporting
    ACCEPTANCE_ENVELOPE: float = 10.0
    REPORT_DIGITS: int = 12

    class Config:
        env_file = ".env"
        case_sensitive = True

# Create settings instance
settings = Settings()
