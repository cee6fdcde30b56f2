"""Application configuration using Pydantic Settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    # Application
    APP_NAME: str = "subfinsler"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    # Parallelism
    THREADS: int = 1

    # Convex bodies
    BODY_VALIDATION_SAMPLES: int = 4096
    ELLIPSE_HARMONICS: int = 64
    ROOT_TOL: float = 1e-12
    FD_STEP: float = 1e-6

    # Quadrature
    QUADRATURE_CELLS: int = 16
    QUADRATURE_ORDER: int = 8

    # Characteristics
    LEAF_STEP: float = 1e-3
    HEUN_TOL: float = 1e-9
    HEUN_MAX_REFINEMENTS: int = 8
    ESTIMATE_WINDOW: int = 7
    REGULARITY_DRIFT: float = 0.1

    # Tolerances
    HORIZONTALITY_TOL: float = 1e-8
    UNIT_SPEED_TOL: float = 1e-6
    CRITICALITY_TOL_ANALYTIC: float = 1e-6
    CRITICALITY_TOL_GRID: float = 1e-3
    SLOPE_JUMP_THRESHOLD: float = 0.5
    APEX_TOL: float = 1e-6
    CURVATURE_TOL: float = 1e-4

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="SUBFINSLER_",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
