"""
Data models for fockbench runs and reports.

This module defines the run configuration, the per-check records and the
report header, using Pydantic for validation and serialization.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import ConfigurationError, ValidationError

SUITES = (
    "words",
    "fock",
    "linop",
    "redheffer",
    "autgroup",
    "rowcon",
    "transform",
    "constrained",
)
REPORT_FORMATS = ("json", "csv")


class RunConfig(BaseModel):
    """Configuration of one verification run."""

    n: int = Field(default=2, description="Number of variables", ge=1, le=9)
    m: int = Field(default=2, description="Coefficient dimension", ge=1, le=16)
    level: int = Field(default=10, description="Truncation level N", ge=2, le=16)
    margin: int = Field(default=3, description="Levels discarded before comparing (B)", ge=0)
    r: float = Field(default=1.0, description="Radius of the rR family", gt=0.0, le=1.0)
    trials: int = Field(default=20, description="Random trials per suite", ge=1)
    seed: int = Field(default=42, description="Base seed; trial k uses seed XOR k", ge=0)
    tol_scale: float = Field(default=1.0, description="Multiplier for every tolerance", gt=0.0)
    suites: List[str] = Field(
        default_factory=lambda: list(SUITES), description="Suites to run, in canonical order"
    )
    out: Optional[str] = Field(None, description="Report path")
    format: str = Field(default="json", description="Report format (json or csv)")
    dump_artifacts: Optional[str] = Field(None, description="Directory for matrix dumps")
    include_timings: bool = Field(
        default=False, description="Record wall times (reports are then not reproducible)"
    )
    workers: Optional[int] = Field(None, description="Concurrent trials", ge=1, le=64)

    @field_validator("suites", mode="before")
    @classmethod
    def expand_suites(cls, v: Any) -> List[str]:
        if isinstance(v, str):
            v = [part.strip() for part in v.split(",") if part.strip()]
        if not v or "all" in v:
            return list(SUITES)
        unknown = [name for name in v if name not in SUITES]
        if unknown:
            raise ValidationError(
                f"Unknown suites {unknown}",
                field="suites",
                value=unknown,
                expected_type="|".join(SUITES + ("all",)),
            )
        # canonical order keeps reports independent of flag order
        return [name for name in SUITES if name in v]

    @field_validator("format")
    @classmethod
    def format_must_be_known(cls, v: str) -> str:
        v = v.lower()
        if v not in REPORT_FORMATS:
            raise ValidationError(
                f"Unknown report format '{v}'", field="format", value=v, expected_type="json|csv"
            )
        return v

    @model_validator(mode="after")
    def level_must_exceed_margin(self) -> "RunConfig":
        if self.level < self.margin + 2:
            raise ValidationError(
                f"Need N >= B + 2 (N={self.level}, B={self.margin})",
                field="level",
                value=self.level,
            )
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides: Any) -> "RunConfig":
        """
        Load a JSON config file; non-None overrides win over the file.

        Raises:
            ConfigurationError: If the file is missing or not valid JSON
        """
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, ValueError) as e:
            raise ConfigurationError(f"Cannot read run config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Run config {path} must be a JSON object")
        data.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**data)


class CheckRecord(BaseModel):
    """Outcome of one numerical check; passed iff residual <= tolerance."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    suite: str = Field(..., description="Suite that produced the record")
    check: str = Field(..., description="Check name")
    trial: int = Field(..., description="Trial index", ge=0)
    params: Dict[str, Any] = Field(default_factory=dict, description="Check parameters")
    residual: float = Field(..., description="Measured residual")
    tolerance: float = Field(..., description="Acceptance threshold")
    predicted_scale: Optional[float] = Field(None, description="Predicted geometric scale")
    passed: bool = Field(..., description="residual <= tolerance")
    wall_time_ms: Optional[float] = Field(None, description="Wall time in milliseconds")

    @model_validator(mode="after")
    def pass_flag_must_match(self) -> "CheckRecord":
        expected = bool(self.residual <= self.tolerance)
        if self.passed != expected:
            raise ValidationError(
                f"Check {self.check}: passed={self.passed} but residual "
                f"{self.residual:.3e} vs tolerance {self.tolerance:.3e}",
                field="passed",
                value=self.passed,
            )
        return self

    @classmethod
    def measure(
        cls,
        suite: str,
        check: str,
        trial: int,
        residual: float,
        tolerance: float,
        predicted_scale: Optional[float] = None,
        **params: Any,
    ) -> "CheckRecord":
        """Build a record, deriving the pass flag; NaN residuals fail."""
        residual = float(residual)
        if math.isnan(residual):
            residual = math.inf
        return cls(
            suite=suite,
            check=check,
            trial=trial,
            params=params,
            residual=residual,
            tolerance=float(tolerance),
            predicted_scale=None if predicted_scale is None else float(predicted_scale),
            passed=residual <= tolerance,
        )

    @classmethod
    def failure(
        cls, suite: str, check: str, trial: int, error: Exception, **params: Any
    ) -> "CheckRecord":
        """A failing record for a check that raised."""
        params["error"] = f"{type(error).__name__}: {error}"
        return cls(
            suite=suite,
            check=check,
            trial=trial,
            params=params,
            residual=math.inf,
            tolerance=0.0,
            passed=False,
        )


class ReportHeader(BaseModel):
    """Header written at the top of every report."""

    version: str = Field(..., description="fockbench version")
    config: Dict[str, Any] = Field(..., description="Effective run configuration")
    settings: Dict[str, Any] = Field(default_factory=dict, description="Effective tolerances")
    coverage: Dict[str, List[str]] = Field(
        default_factory=dict, description="Invariant -> producing check names"
    )
    notes: List[str] = Field(default_factory=list, description="Caveats")


class Report(BaseModel):
    """A full report: header plus records in (suite, trial) order."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    header: ReportHeader
    records: List[CheckRecord] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(record.passed for record in self.records)

    @property
    def failures(self) -> List[CheckRecord]:
        return [record for record in self.records if not record.passed]


class CoefficientRow(BaseModel):
    """One Fourier coefficient of Theta_T against its Taylor coefficient."""

    k: int
    theta: float
    taylor: float
    poisson: float
    deviation: float


class ResidualRow(BaseModel):
    """Transport residuals for the scalar Mobius example at one truncation level."""

    level: int
    res_theta: float
    res_k: float
    predicted_scale: float


class MobiusDemo(BaseModel):
    """The n = 1 reduction to the classical characteristic function of a contraction."""

    t: float = Field(..., gt=0.0, lt=1.0)
    level: int
    margin: int
    coefficients: List[CoefficientRow]
    residuals: List[ResidualRow]
    mu: Optional[float] = Field(
        None, gt=-1.0, lt=1.0, description="Offset phi_X(0) of the Mobius map"
    )
    tolerance: float = Field(1e-3, gt=0.0, description="Target for the transport residuals")

    @property
    def max_deviation(self) -> float:
        return max((row.deviation for row in self.coefficients), default=0.0)

    @property
    def residuals_decrease(self) -> bool:
        """res_theta strictly decreases from every row still above the tolerance."""
        values = [row.res_theta for row in self.residuals]
        return all(b < a for a, b in zip(values, values[1:]) if a > self.tolerance)

    @property
    def converged(self) -> bool:
        if not self.residuals:
            return False
        last = self.residuals[-1]
        return max(last.res_theta, last.res_k) <= self.tolerance

    @property
    def passed(self) -> bool:
        """Converged, with the last residual below the first."""
        values = [row.res_theta for row in self.residuals]
        return self.converged and (len(values) == 1 or values[-1] < values[0])


def encode_matrix(M: np.ndarray) -> Dict[str, List[List[float]]]:
    """Nested re/im lists."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def decode_matrix(data: Dict[str, Any]) -> np.ndarray:
    try:
        return np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed matrix: {e}", field="matrix")
