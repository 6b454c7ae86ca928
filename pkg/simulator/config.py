# Configuration and logging setup

import logging
import os
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings


class ConfigError(ValueError):
    """Raised when a scenario, sweep grid or command line is not valid."""


class Settings(BaseSettings):
    """Simulator configuration with environment variable support."""

    # Application Settings
    app_name: str = "DDF Rotations Simulator"
    app_version: str = "1.0.0"

    # Logging
    log_level: str = Field(default="INFO")
    log_file: str = Field(default="logs/ddf.log", description="Empty string disables the file handler")

    # Monte Carlo execution
    default_threads: Optional[int] = Field(default=None, description="None means os.cpu_count()")
    batch_uniform_budget: int = Field(default=1 << 22, description="Uniform draws held in memory per batch")
    max_rotation_period: int = Field(default=1 << 20, description="Largest L^N a random schedule may permute")

    # Outputs
    results_dir: str = Field(default="results")

    model_config = {
        "env_prefix": "DDF_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "extra": "ignore"
    }

    def resolve_threads(self, threads: Optional[int] = None) -> int:
        """Worker count to use when the caller did not pin one."""
        if threads is not None:
            if threads < 1:
                raise ConfigError(f"threads must be >= 1, got {threads}")
            return threads
        if self.default_threads is not None:
            return max(1, self.default_threads)
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()


def configure_logging(config: Settings = settings) -> None:
    """Install stderr and (optionally) file handlers on the root logger."""
    handlers: list = [logging.StreamHandler()]
    if config.log_file:
        # Create logs directory if it doesn't exist
        log_dir = os.path.dirname(config.log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(config.log_file, encoding="utf-8"))

    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )
