"""
Application configuration management.

This module provides centralized configuration using pydantic-settings
that reads from .env file in the project root. Every numeric knob that is
not part of a run's mathematical parameters (budgets, tolerances, output
location, parallelism) lives here.
"""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Find project root (where .env is located)
PROJECT_ROOT = Path(__file__).parent.parent


class LoggingSettings(BaseSettings):
    """Logging configuration settings."""

    level: str = Field(default="WARNING")
    json_format: bool = Field(default=False)
    enable_console: bool = Field(default=True)
    enable_file: bool = Field(default=False)
    file_path: str = Field(default="logs/thetalab.log")

    model_config = SettingsConfigDict(
        env_prefix="THETALAB_LOG_",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class EnumerationSettings(BaseSettings):
    """Lattice enumeration limits."""

    budget: int = Field(
        default=20_000_000,
        gt=0,
        description="Maximum number of Fincke-Pohst leaves per enumeration",
    )
    boundary_slack: float = Field(
        default=1e-9,
        ge=0.0,
        description="Relative slack for region boundaries under irrational g",
    )
    max_scale_doublings: int = Field(
        default=24,
        gt=0,
        description="Scale doublings allowed while searching successive minima",
    )

    model_config = SettingsConfigDict(
        env_prefix="THETALAB_ENUM_",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class NumericsSettings(BaseSettings):
    """Defaults for special functions and quadrature."""

    target_rel_tol: float = Field(default=1e-10, gt=0.0)
    working_digits: int = Field(default=30, ge=16)
    tau_floor: float = Field(default=1e-6, gt=0.0)
    fd_step: float = Field(default=1e-3, gt=0.0)
    max_refinements: int = Field(
        default=12,
        gt=0,
        description="Panel doublings / truncation doublings before giving up",
    )

    model_config = SettingsConfigDict(
        env_prefix="THETALAB_NUM_",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class OutputSettings(BaseSettings):
    """Report output configuration."""

    THETALAB_OUTPUT_DIR: str = Field(default="reports")
    metrics_file: str = Field(default="metrics.prom")

    @field_validator("THETALAB_OUTPUT_DIR")
    @classmethod
    def non_empty_dir(cls, v: str) -> str:
        """Reject an empty output directory."""
        if not v.strip():
            raise ValueError("output directory must not be empty")
        return v

    @property
    def output_dir(self) -> Path:
        return Path(self.THETALAB_OUTPUT_DIR)

    model_config = SettingsConfigDict(
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


class WorkerSettings(BaseSettings):
    """Worker pool configuration for grid sweeps."""

    max_workers: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="THETALAB_",
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class Settings(BaseSettings):
    """Main application settings."""

    # Sub-configurations
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    enumeration: EnumerationSettings = Field(default_factory=EnumerationSettings)
    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    workers: WorkerSettings = Field(default_factory=WorkerSettings)

    model_config = SettingsConfigDict(
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


# Global settings instance
settings = Settings()
