"""Tests for seeded instance generation."""

import numpy as np
import pytest

from fockbench.autgroup import ball_offset
from fockbench.exceptions import ValidationError
from fockbench.linop import isometry_residual, op_norm, unitarity_residual
from fockbench.sampling import InstanceSampler, suite_salt


class TestInstanceSampler:
    """Test the per-trial generators."""

    def test_reproducible(self):
        """Equal (seed, trial, salt) give equal draws."""
        a = InstanceSampler(42, 3, suite_salt("rowcon"))
        b = InstanceSampler(42, 3, suite_salt("rowcon"))

        np.testing.assert_array_equal(a.ginibre(3, 3), b.ginibre(3, 3))

    def test_salt_separates_suites(self):
        """Different suites draw different instances."""
        a = InstanceSampler(42, 0, suite_salt("rowcon"))
        b = InstanceSampler(42, 0, suite_salt("transform"))

        assert not np.allclose(a.ginibre(2, 2), b.ginibre(2, 2))

    def test_suite_salt_is_stable(self):
        """The salt is a CRC32, independent of the interpreter's hash seed."""
        assert suite_salt("words") == suite_salt("words")
        assert suite_salt("words") != suite_salt("fock")
        assert 0 <= suite_salt("words") < 2**32

    def test_negative_seed_rejected(self):
        with pytest.raises(ValidationError):
            InstanceSampler(-1)

    def test_contraction_norm(self, sampler):
        """Requested norms are met exactly."""
        assert op_norm(sampler.contraction(3, 4, norm=0.7)) == pytest.approx(0.7)

    def test_unitary_and_isometry(self, sampler):
        """Haar unitaries and their column blocks."""
        assert unitarity_residual(sampler.unitary(4)) < 1e-12
        assert isometry_residual(sampler.isometry(5, 2)) < 1e-12
        assert sampler.unitary(0).shape == (0, 0)
        with pytest.raises(ValidationError):
            sampler.isometry(2, 3)

    @pytest.mark.parametrize("kind", ["contraction", "isometry", "coisometry", "unitary"])
    def test_compatible_pairs(self, sampler, kind):
        """Pairs can be composed and belong to the requested class."""
        L, L1 = sampler.compatible_pair(kind)
        x, _, _, z = L.dims
        _, u1, y1, _ = L1.dims

        assert (u1, y1) == (z, x)
        for system in (L, L1):
            M = system.matrix()
            if kind == "isometry":
                assert isometry_residual(M) < 1e-12
            elif kind == "coisometry":
                assert isometry_residual(M.conj().T) < 1e-12
            elif kind == "unitary":
                assert unitarity_residual(M) < 1e-12
            else:
                assert op_norm(M) < 1

    def test_unknown_kind(self, sampler):
        with pytest.raises(ValidationError):
            sampler.block_system((1, 1, 1, 1), kind="normal")

    def test_ball_point(self, sampler):
        """Radii stay in the requested band."""
        for _ in range(10):
            radius = np.linalg.norm(sampler.ball_point(3, max_radius=0.5, min_radius=0.2))
            assert 0.2 <= radius <= 0.5

    def test_row_contraction_is_strict(self, sampler):
        """Random rows respect max_row_norm."""
        T = sampler.row_contraction(2, 3, max_norm=0.4)

        assert T.strict
        assert T.row_norm <= 0.4 + 1e-12

    def test_commuting_row(self, sampler):
        """Commuting draws commute."""
        T = sampler.commuting_row(3, 2)
        for A in T.matrices:
            for B in T.matrices:
                assert op_norm(A @ B - B @ A) < 1e-12

    def test_junitary_respects_boost(self, sampler):
        """Random J-unitaries have |phi_X(0)| <= tanh(max_boost)."""
        X = sampler.junitary(2, max_boost=0.1)
        assert np.linalg.norm(X.y) / abs(X.x) <= np.tanh(0.1) + 1e-12

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_hyperbolic_junitary_offset(self, sampler, n):
        """Hyperbolic draws are J-unitary with |phi_X(0)| in [0.3, 0.4]."""
        X = sampler.hyperbolic_junitary(n)

        assert X.residual() < 1e-12
        assert 0.3 - 1e-12 <= ball_offset(X) <= 0.4 + 1e-12
