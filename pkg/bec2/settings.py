"""
Runtime settings and logging setup.

Settings come from environment variables prefixed ``BEC2_`` (and an optional
``.env`` file). ``get_settings()`` caches the instance for the process.
"""

import logging
import os
from functools import lru_cache
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


# ==================================================
# 1. ENVIRONMENT CONFIGURATION
# ==================================================

class Settings(BaseSettings):
    """
    Process-wide settings with environment variable support
    """

    model_config = SettingsConfigDict(
        env_prefix="BEC2_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, description="Sweep concurrency cap")
    log_level: str = Field(default="INFO", description="Log level")
    log_file: Optional[str] = Field(default=None, description="Log file path")
    float_format: str = Field(
        default="repr", description="CSV float format: repr (shortest round-trip) or a format spec such as .12g"
    )
    dense_limit_two_j: int = Field(default=128, description="Largest two_j accepted by dense oracles")

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        if v < 1:
            raise ValueError("threads must be at least 1")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level '{v}'")
        return level

    @field_validator("float_format")
    @classmethod
    def validate_float_format(cls, v: str) -> str:
        if v == "repr":
            return v
        try:
            format(0.5, v)
        except ValueError as exc:
            raise ValueError(f"invalid float format '{v}'") from exc
        return v


@lru_cache()
def get_settings() -> Settings:
    """
    Cached settings instance.

    Returns:
        Settings: Settings resolved from the environment
    """
    return Settings()


# ==================================================
# 2. LOGGING CONFIGURATION
# ==================================================

def setup_logging(level: Optional[str] = None) -> logging.Logger:
    """
    Configure root logging for command-line runs.

    Args:
        level (str): Overrides the configured level when given

    Returns:
        logging.Logger: The package logger
    """
    settings = get_settings()
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    handlers = [logging.StreamHandler()]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))

    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper()),
        format=log_format,
        handlers=handlers,
        force=True,
    )
    logging.getLogger("matplotlib").setLevel(logging.WARNING)

    logger = logging.getLogger("bec2")
    logger.debug(f"Logging configured at {level or settings.log_level}")
    return logger
