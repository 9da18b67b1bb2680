"""Tests for run configuration and record models."""

import json
import math

import numpy as np
import pydantic
import pytest

from fockbench.exceptions import ConfigurationError, ValidationError
from fockbench.models import (
    SUITES,
    CheckRecord,
    CoefficientRow,
    MobiusDemo,
    Report,
    ReportHeader,
    ResidualRow,
    RunConfig,
    decode_matrix,
    encode_matrix,
)


class TestRunConfig:
    """Test run configuration validation."""

    def test_defaults(self):
        """Defaults run every suite."""
        config = RunConfig()

        assert config.n == 2
        assert config.level == 10
        assert config.margin == 3
        assert config.suites == list(SUITES)
        assert config.format == "json"

    def test_suites_canonical_order(self):
        """Suites are deduplicated into canonical order."""
        config = RunConfig(suites=["transform", "words", "transform"])
        assert config.suites == ["words", "transform"]

    def test_suites_from_string(self):
        """Comma-separated strings and 'all' are accepted."""
        assert RunConfig(suites="fock, linop").suites == ["fock", "linop"]
        assert RunConfig(suites=["words", "all"]).suites == list(SUITES)

    def test_unknown_suite(self):
        with pytest.raises(ValidationError):
            RunConfig(suites=["spectral"])

    def test_unknown_format(self):
        with pytest.raises(ValidationError):
            RunConfig(format="xml")

    def test_format_is_case_insensitive(self):
        assert RunConfig(format="CSV").format == "csv"

    def test_level_must_exceed_margin(self):
        """N >= B + 2."""
        with pytest.raises(ValidationError):
            RunConfig(level=4, margin=3)

    def test_from_file_with_overrides(self, tmp_path):
        """File values are overridden by non-None keyword values."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"n": 3, "level": 6, "margin": 2, "trials": 4}))

        config = RunConfig.from_file(path, trials=2, seed=None)
        assert (config.n, config.level, config.trials, config.seed) == (3, 6, 2, 42)

    def test_from_file_errors(self, tmp_path):
        """Missing files and non-objects raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(tmp_path / "missing.json")
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(path)


class TestCheckRecord:
    """Test per-check records."""

    def test_measure_sets_pass_flag(self):
        """passed iff residual <= tolerance."""
        ok = CheckRecord.measure("words", "roundtrip", 0, 0.0, 0.0)
        bad = CheckRecord.measure("words", "roundtrip", 0, 2e-10, 1e-10, predicted_scale=1e-9, level=3)

        assert ok.passed
        assert not bad.passed
        assert bad.params == {"level": 3}
        assert bad.predicted_scale == 1e-9

    def test_nan_fails(self):
        """NaN residuals are recorded as infinite failures."""
        record = CheckRecord.measure("fock", "flip", 1, float("nan"), 1.0)

        assert math.isinf(record.residual)
        assert not record.passed

    def test_inconsistent_flag_rejected(self):
        with pytest.raises(ValidationError):
            CheckRecord(suite="s", check="c", trial=0, residual=1.0, tolerance=0.5, passed=True)

    def test_failure(self):
        """Exceptions become failing records with the error text."""
        record = CheckRecord.failure("linop", "defect", 2, ValueError("boom"), level=4)

        assert not record.passed
        assert record.params == {"level": 4, "error": "ValueError: boom"}
        assert record.tolerance == 0.0

    def test_infinite_residual_serializes(self):
        """Infinity survives a JSON round trip."""
        record = CheckRecord.failure("linop", "defect", 0, RuntimeError("x"))
        restored = CheckRecord.model_validate(json.loads(record.model_dump_json()))

        assert math.isinf(restored.residual)


class TestReport:
    """Test report and demo containers."""

    def test_failures(self):
        header = ReportHeader(version="0.1.0", config={})
        records = [
            CheckRecord.measure("words", "a", 0, 0.0, 1.0),
            CheckRecord.measure("words", "b", 0, 2.0, 1.0),
        ]
        report = Report(header=header, records=records)

        assert not report.all_passed
        assert [record.check for record in report.failures] == ["b"]

    def test_demo_properties(self):
        """Deviation maximum and monotone residuals."""
        demo = MobiusDemo(
            t=0.6,
            level=4,
            margin=1,
            coefficients=[CoefficientRow(k=0, theta=-0.6, taylor=-0.6, poisson=0.8, deviation=1e-16)],
            residuals=[
                ResidualRow(level=4, res_theta=1e-3, res_k=1e-3, predicted_scale=1e-3),
                ResidualRow(level=5, res_theta=1e-4, res_k=1e-4, predicted_scale=1e-4),
            ],
        )

        assert demo.max_deviation == 1e-16
        assert demo.residuals_decrease
        assert demo.converged
        assert demo.passed

    def test_demo_flat_residuals_fail(self):
        """A saturated, flat residual sequence is neither decreasing nor converged."""
        demo = MobiusDemo(
            t=0.6,
            level=12,
            margin=3,
            coefficients=[],
            residuals=[
                ResidualRow(level=level, res_theta=1.0, res_k=0.9, predicted_scale=1.0)
                for level in (10, 11, 12)
            ],
            mu=-0.6,
        )

        assert not demo.residuals_decrease
        assert not demo.converged
        assert not demo.passed

    def test_demo_ignores_noise_after_convergence(self):
        """Rows below the tolerance need not keep decreasing."""
        values = [0.5, 1e-2, 1e-5, 2e-5]
        demo = MobiusDemo(
            t=0.5,
            level=6,
            margin=2,
            coefficients=[],
            residuals=[
                ResidualRow(level=6 + i, res_theta=v, res_k=v, predicted_scale=1.0)
                for i, v in enumerate(values)
            ],
        )

        assert demo.residuals_decrease
        assert demo.passed


    def test_demo_rejects_unit_t(self):
        with pytest.raises(pydantic.ValidationError):
            MobiusDemo(t=1.0, level=4, margin=1, coefficients=[], residuals=[])

    def test_matrix_codec(self):
        """encode_matrix and decode_matrix are inverse."""
        M = np.array([[1 + 2j, 3], [0, -1j]])
        np.testing.assert_array_equal(decode_matrix(encode_matrix(M)), M)
        with pytest.raises(ValidationError):
            decode_matrix({"re": [[1]]})
