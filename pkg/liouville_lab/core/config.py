# core/config.py
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="LIOUVILLE_", env_file=".env", extra="ignore"
    )

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON_PATH: Optional[str] = None
    LOG_CONSOLE: bool = True

    # Execution
    THREADS: int = 1
    DEFAULT_SEED: int = 20241127

    # Spectral truncation
    KERNEL_TAIL_TOLERANCE: float = 1e-6

    # Monte Carlo reporting
    CI_LEVEL: float = 0.95
    MIN_EFFECTIVE_SAMPLE_FRACTION: float = 0.05

    # Polyakov route A
    A_GRID_TAIL_TOLERANCE: float = 1e-8
    A_GRID_MAX_WIDENINGS: int = 6


settings = Settings()
