from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_NAME: str = "Spherical-Dirichlet Toolkit"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    HOST: str = "0.0.0.0"
    PORT: int = 8000

    # estimation defaults
    EPSILON: float = 1e-6
    DELTA: float = 1e-8
    GTOL: float = 1e-8
    MAX_ITER: int = 500
    MEMORY: int = 10
    MAX_BACKTRACKS: int = 40
    MOM_MAX_ITER: int = 10000

    # text-mining transform ln(c + x)
    LOG_SHIFT: float = 1.10

    SEED: int = 42

    # quadrature oracle grid
    QUAD_NODES_PER_PANEL: int = 16
    QUAD_PANELS: int = 16
    QUAD_LEVELS: int = 12

    model_config = SettingsConfigDict(env_file=".env", env_prefix="SPHDIR_", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    return Settings()
