from pydantic_settings import BaseSettings
from typing import Literal, Optional

#The configuration file - all tolerances, caps and defaults in one place.
class Settings(BaseSettings):
    # Numerics
    MATRIX_TOLERANCE: float = 1e-10
    FUNCTIONAL_TOLERANCE: float = 1e-8
    GROUP_TOLERANCE: float = 1e-7  # relative to the spectral radius
    MAX_EIGVEC_CONDITION: float = 1e10
    RECONSTRUCTION_TOLERANCE: float = 1e-9
    POLE_GUARD: float = 1e-12
    ROOT_OF_UNITY_ORDER: int = 64
    ROOT_OF_UNITY_TOLERANCE: float = 1e-8

    # Functional representation
    SAMPLE_RADIUS: float = 1.0
    NODE_CLEARANCE: float = 1e-3
    SAMPLE_CLEARANCE: float = 0.05
    DEGREE_CAP: int = 12
    NUMERIC_DEGREE_CAP: int = 40
    CUTOFF_CAP: int = 64
    STABILITY_EXTENSION: int = 4
    STABILITY_TOLERANCE: float = 1e-8
    FAMILY_CHECK: Literal["constraints", "prest"] = "constraints"
    PREST_TOLERANCE: float = 1e-10
    PREST_MAX_ITERATIONS: int = 60

    # XXZ chain
    CHAIN_SITE_CAP: int = 12
    BLOCK_TOLERANCE: float = 1e-9
    SPECTRUM_MATCH_TOLERANCE: float = 1e-8
    W1_SCALE: float = 0.5  # W1 acts as (z_s + 1/z_s)/2 on the discrete grid

    # Scans
    SCAN_POINT_CAP: int = 10_000
    SCAN_WORKERS: Optional[int] = None  # None = os.cpu_count()

    # Output
    RESULT_SCHEMA_VERSION: str = "1.0"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    class Config:
        env_file = ".env"
        env_prefix = "QONSAGER_"

settings = Settings()
