"""Tests for the verification suites and the trial orchestrator."""

import math

import pytest

from fockbench.config import get_settings, set_settings
from fockbench.exceptions import ValidationError
from fockbench.models import SUITES, RunConfig
from fockbench.suite import (
    COVERAGE,
    Outcome,
    TrialRecorder,
    VerificationSuite,
    demo_mobius,
    run_suite,
)

EXACT_SUITES = ["words", "fock", "redheffer"]


class TestTrialRecorder:
    """Test per-check bookkeeping."""

    def test_passing_check(self):
        """Plain floats are compared against the tolerance."""
        recorder = TrialRecorder("words", 0, {"n": 2})
        record = recorder.check("zero", lambda: 0.0, 1e-12, level=3)

        assert record.passed
        assert record.params == {"n": 2, "level": 3}
        assert recorder.records == [record]
        assert record.wall_time_ms is None

    def test_outcome_overrides_tolerance(self):
        """An Outcome may carry its own tolerance and predicted scale."""
        recorder = TrialRecorder("rowcon", 1, {})
        record = recorder.check("decay", lambda: Outcome(1e-4, 1e-3, 5e-4), 1e-12)

        assert record.passed
        assert record.tolerance == 1e-3
        assert record.predicted_scale == 5e-4

    def test_exception_becomes_failure(self):
        """A raising check yields a failing record instead of propagating."""
        recorder = TrialRecorder("linop", 2, {})

        def boom() -> float:
            raise ValidationError("bad input")

        record = recorder.check("explodes", boom, 1.0)

        assert not record.passed
        assert math.isinf(record.residual)
        assert record.params["error"] == "ValidationError: bad input"

    def test_missing_tolerance(self):
        """A check without any tolerance fails."""
        record = TrialRecorder("words", 0, {}).check("untoleranced", lambda: 0.0)
        assert not record.passed

    def test_timings(self):
        """Wall times are only recorded on request."""
        record = TrialRecorder("words", 0, {}, include_timings=True).check("t", lambda: 0.0, 1.0)
        assert record.wall_time_ms is not None and record.wall_time_ms >= 0


class TestVerificationSuite:
    """Test orchestration, ordering and determinism."""

    def test_settings_scaled(self, small_config):
        """tol_scale rescales the acceptance tolerances."""
        config = small_config.model_copy(update={"tol_scale": 10.0})
        suite = VerificationSuite(config)

        assert suite.settings.law_tol == pytest.approx(10 * get_settings().law_tol)

    def test_dense_level(self, small_config, small_settings):
        """Dense checks never exceed the configured level."""
        suite = VerificationSuite(small_config, small_settings)

        assert suite.dense_level == 3
        assert suite.dense_margin == 1
        assert suite.workers == 1

    def test_exact_suites_pass(self, small_config, small_settings):
        """The algebraic suites pass on a small configuration."""
        config = small_config.model_copy(update={"suites": EXACT_SUITES, "trials": 2})
        records = run_suite(config, small_settings)

        failures = [f"{r.suite}.{r.check}: {r.params.get('error', r.residual)}" for r in records if not r.passed]
        assert failures == []
        assert {record.suite for record in records} == set(EXACT_SUITES)

    def test_record_order(self, small_config, small_settings):
        """Records come back in (suite, trial) order."""
        config = small_config.model_copy(update={"suites": EXACT_SUITES, "trials": 2, "workers": 4})
        records = run_suite(config, small_settings)
        keys = [(SUITES.index(record.suite), record.trial) for record in records]

        assert keys == sorted(keys)

    def test_deterministic_across_workers(self, small_config, small_settings):
        """Worker count does not change the records."""
        serial = small_config.model_copy(update={"suites": ["linop"], "trials": 2, "workers": 1})
        parallel = serial.model_copy(update={"workers": 3})

        first = [r.model_dump() for r in run_suite(serial, small_settings)]
        second = [r.model_dump() for r in run_suite(parallel, small_settings)]
        assert first == second

    def test_trial_independent_of_suite_selection(self, small_config, small_settings):
        """A suite draws the same instances alone or with others."""
        alone = small_config.model_copy(update={"suites": ["redheffer"]})
        together = small_config.model_copy(update={"suites": ["words", "redheffer"]})

        first = [r.model_dump() for r in run_suite(alone, small_settings)]
        second = [r.model_dump() for r in run_suite(together, small_settings) if r.suite == "redheffer"]
        assert first == second

    @pytest.mark.asyncio
    async def test_run_async_restores_settings(self, small_config, small_settings):
        """The run installs its settings and restores the previous ones."""
        previous = get_settings()
        config = small_config.model_copy(update={"suites": ["words"]})

        records = await VerificationSuite(config, small_settings).run_async()

        assert records
        assert get_settings() is previous

    def test_artifacts(self, small_config, small_settings, tmp_path):
        """Trial 0 dumps matrices and checks their round trip."""
        config = small_config.model_copy(
            update={"suites": ["rowcon"], "dump_artifacts": str(tmp_path)}
        )
        records = run_suite(config, small_settings)
        dumps = [r for r in records if r.check == "artifact_roundtrip"]

        assert {r.params["role"] for r in dumps} == {"Theta_T", "K_T"}
        assert all(r.passed for r in dumps)
        assert (tmp_path / "rowcon_Theta_T.json").exists()
        assert (tmp_path / "rowcon_K_T.bin").exists()

    @pytest.mark.slow
    def test_full_run_covers_every_suite(self, small_config, small_settings):
        """Every suite reports and every coverage entry names produced checks."""
        records = run_suite(small_config, small_settings)
        produced = {f"{r.suite}.{r.check}" for r in records}

        assert {record.suite for record in records} == set(SUITES)
        for invariant, checks in COVERAGE.items():
            assert any(check in produced for check in checks), invariant


class TestMobiusDemo:
    """Test the scalar reduction."""

    def test_coefficients_match_taylor(self):
        """Theta_T and K_T coefficients match the closed forms."""
        demo = demo_mobius(t=0.6, N=8, margin=2)

        assert len(demo.coefficients) == 9
        assert demo.max_deviation < 1e-12
        assert demo.coefficients[0].theta == pytest.approx(-0.6)
        assert demo.coefficients[2].poisson == pytest.approx(0.8 * 0.36)

    def test_default_mobius_converges(self):
        """With phi_X(0) = -0.6 the residuals drop below 1e-3 as N grows past the top block."""
        demo = demo_mobius(t=0.6, N=12, margin=3)

        assert demo.mu == pytest.approx(-0.6)
        assert demo.residuals[0].level == 12
        assert demo.residuals[-1].res_theta < 1e-3
        assert demo.residuals[-1].res_k < 1e-3
        assert demo.converged
        assert demo.passed

    def test_residual_rows(self):
        """Rows step by the margin from N and stay below their coupling."""
        demo = demo_mobius(t=0.5, N=7, margin=3)

        levels = [row.level for row in demo.residuals]
        assert levels[0] == 7
        assert all(b - a == 3 for a, b in zip(levels, levels[1:]))
        for row in demo.residuals:
            assert row.res_theta <= row.predicted_scale + 1e-10
        assert demo.passed

    def test_reports_failure_when_capped(self):
        """Stopping before the residuals reach the tolerance leaves the demo unconverged."""
        demo = demo_mobius(t=0.6, N=12, margin=3, max_level=15, tol=1e-14)

        assert [row.level for row in demo.residuals] == [12, 15]
        assert not demo.converged
        assert not demo.passed

    @pytest.mark.parametrize(
        "kwargs",
        [{"t": 1.0}, {"mu": 1.0}, {"mu": -1.2}, {"N": 3, "margin": 2}, {"max_level": 5}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            demo_mobius(**kwargs)
