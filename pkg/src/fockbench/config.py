"""
Configuration management for the fockbench library.

This module handles loading numerical tolerances, sampling bounds and runtime
options from environment variables and .env files, with sensible defaults.
"""

import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import Field, ValidationInfo, field_validator
from pydantic_settings import BaseSettings

from .exceptions import ConfigurationError

# Load environment variables from .env file if it exists
load_dotenv()

# Fields rescaled by --tol-scale
TOLERANCE_FIELDS = (
    "contraction_tol",
    "junitary_tol",
    "exact_tol",
    "law_tol",
    "intertwiner_tol",
    "intertwiner_hard_limit",
    "theorem_tol",
    "roundoff_floor",
)


class WorkbenchSettings(BaseSettings):
    """Configuration class for the fockbench library."""

    # Numerical acceptance thresholds
    contraction_tol: float = Field(
        default=1e-10,
        description="Slack allowed above 1 for the largest singular value of a contraction",
        ge=0.0,
    )
    rank_tol: float = Field(
        default=1e-10,
        description="Eigenvalue cutoff (relative to max(1, largest)) for defect spaces",
        gt=0.0,
    )
    junitary_tol: float = Field(
        default=1e-10,
        description="Tolerance for X*JX = J and Y*Y = I",
        ge=0.0,
    )
    redheffer_rcond: float = Field(
        default=1e-12,
        description="Reciprocal condition threshold for I - B1 C",
        gt=0.0,
        lt=1.0,
    )
    exact_tol: float = Field(
        default=1e-12,
        description="Tolerance for identities that are exact on the truncated space",
        ge=0.0,
    )
    law_tol: float = Field(
        default=1e-10,
        description="Tolerance for algebraic laws evaluated in floating point",
        ge=0.0,
    )
    intertwiner_tol: float = Field(
        default=1e-8,
        description="Unitarity residual accepted for defect intertwiners",
        ge=0.0,
    )
    intertwiner_hard_limit: float = Field(
        default=1e-6,
        description="Above this residual intertwiners are rejected instead of polished",
        ge=0.0,
    )
    theorem_tol: float = Field(
        default=1e-3,
        description="Tolerance for truncation-limited transport identities",
        ge=0.0,
    )
    roundoff_floor: float = Field(
        default=1e-11,
        description="Residuals below this floor pass geometric decay tests outright",
        ge=0.0,
    )
    decay_slack: float = Field(
        default=0.05,
        description="Additive slack on the predicted geometric decay factor",
        ge=0.0,
        le=1.0,
    )

    # Sampling Configuration
    max_boost: float = Field(
        default=0.1,
        description="Largest rapidity of random J-unitaries (|phi_X(0)| <= tanh)",
        ge=0.0,
        le=5.0,
    )
    max_row_norm: float = Field(
        default=0.6,
        description="Largest row norm of random strict row contractions",
        gt=0.0,
        lt=1.0,
    )
    dense_level: int = Field(
        default=5,
        description="Truncation level for dense Redheffer cross-check paths",
        ge=1,
        le=8,
    )
    instances_per_trial: int = Field(
        default=5,
        description="Random block-system instances drawn per Redheffer trial",
        ge=1,
        le=100,
    )

    # Performance Configuration
    max_workers: int = Field(
        default=4,
        description="Maximum number of trials evaluated concurrently",
        ge=1,
        le=64,
    )

    # Logging and Debug Configuration
    log_level: str = Field(default="INFO", description="Logging level")
    debug: bool = Field(
        default=False,
        description="Enable debug diagnostics (e.g. the uninverted intertwiner variant)",
    )

    model_config = {
        "env_prefix": "FOCKBENCH_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "validate_assignment": True,
        "extra": "ignore",
    }

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ConfigurationError(
                f"Invalid log level: {v}. Must be one of {valid_levels}"
            )
        return v.upper()

    @field_validator("intertwiner_hard_limit")
    @classmethod
    def validate_hard_limit(cls, v: float, info: ValidationInfo) -> float:
        soft = info.data.get("intertwiner_tol", 0.0)
        if v < soft:
            raise ConfigurationError(
                f"intertwiner_hard_limit ({v}) cannot be below intertwiner_tol ({soft})"
            )
        return v

    def scaled(self, tol_scale: float) -> "WorkbenchSettings":
        """Return a copy with every acceptance tolerance multiplied by tol_scale."""
        if tol_scale <= 0:
            raise ConfigurationError(
                "Tolerance scale must be positive",
                invalid_values={"tol_scale": tol_scale},
            )
        data = self.model_dump()
        for name in TOLERANCE_FIELDS:
            data[name] = data[name] * tol_scale
        return WorkbenchSettings.from_dict(data)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "WorkbenchSettings":
        """Create configuration from dictionary."""
        return cls(**config_dict)

    @classmethod
    def from_env_file(cls, env_file: str) -> "WorkbenchSettings":
        """Create configuration from specific environment file."""
        if not os.path.exists(env_file):
            raise ConfigurationError(f"Environment file not found: {env_file}")

        load_dotenv(env_file, override=True)
        return cls()

    def validate_configuration(self) -> None:
        """Validate the complete configuration and raise errors if invalid."""
        errors = []

        if self.exact_tol > self.law_tol:
            errors.append("exact_tol cannot exceed law_tol")

        if self.law_tol > self.theorem_tol:
            errors.append("law_tol cannot exceed theorem_tol")

        if self.roundoff_floor > self.theorem_tol:
            errors.append("roundoff_floor cannot exceed theorem_tol")

        if errors:
            raise ConfigurationError(
                "Configuration validation failed", details={"errors": errors}
            )


def load_settings(
    config_dict: Optional[Dict[str, Any]] = None, env_file: Optional[str] = None
) -> WorkbenchSettings:
    """
    Load configuration from various sources.

    Args:
        config_dict: Dictionary of configuration values
        env_file: Path to environment file

    Returns:
        Loaded and validated configuration

    Raises:
        ConfigurationError: If configuration is invalid
    """
    try:
        if env_file:
            settings = WorkbenchSettings.from_env_file(env_file)
        elif config_dict:
            settings = WorkbenchSettings.from_dict(config_dict)
        else:
            settings = WorkbenchSettings()

        settings.validate_configuration()
        return settings

    except Exception as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"Failed to load configuration: {e}")


# Global configuration instance - can be overridden
_global_settings: Optional[WorkbenchSettings] = None


def get_settings() -> WorkbenchSettings:
    """Get the global configuration instance."""
    global _global_settings
    if _global_settings is None:
        _global_settings = load_settings()
    return _global_settings


def set_settings(settings: Optional[WorkbenchSettings]) -> None:
    """Set (or with None, reset) the global configuration instance."""
    global _global_settings
    _global_settings = settings
