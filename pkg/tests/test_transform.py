"""Tests for the automorphism action on row contractions and the transport law."""

import numpy as np
import pytest
import scipy.sparse as sp

from fockbench.autgroup import ball_offset, make_junitary, phi
from fockbench.exceptions import ContractionError, IntertwinerError, ValidationError
from fockbench.rowcon import RowContraction, char_function
from fockbench.sampling import InstanceSampler
from fockbench.transform import (
    _validate_unitary,
    apply_automorphism,
    apply_inverse_automorphism,
    associativity_residual,
    conjugate_top,
    defect_intertwiners,
    first_row_residuals,
    shifted_realization_residuals,
    theorem51_residuals,
    transport_margin,
)


@pytest.fixture
def small_boost():
    return make_junitary("mobius", 2, mu=[0.05, 0.03j])


@pytest.fixture
def random_X():
    return make_junitary("random", 2, rng=np.random.default_rng(3), max_boost=0.2)


@pytest.fixture
def random_T():
    return InstanceSampler(23).row_contraction(2, 2, max_norm=0.5)


class TestAutomorphismAction:
    """Test Phi_X(T) and its inverse."""

    def test_identity_acts_trivially(self, random_T):
        """Phi_I(T) = T."""
        image = apply_automorphism(make_junitary("identity", 2), random_T)
        np.testing.assert_allclose(image.row, random_T.row, atol=1e-14)

    def test_inverse_undoes_action(self, random_X, random_T):
        """Phi_X^{-1}(Phi_X(T)) = T."""
        image = apply_automorphism(random_X, random_T)
        restored = apply_inverse_automorphism(random_X, image)

        np.testing.assert_allclose(restored.row, random_T.row, atol=1e-12)

    def test_scalars_follow_phi(self, random_X):
        """On 1 x 1 entries Phi_X is the ball map phi_X."""
        lam = np.array([0.3 - 0.1j, 0.2j])
        T = RowContraction.from_matrices([[[lam[0]]], [[lam[1]]]])

        image = apply_automorphism(random_X, T)
        np.testing.assert_allclose(image.row.ravel(), phi(random_X, lam), atol=1e-12)

    def test_commuting_rows_act_on_joint_eigenvalues(self, random_X):
        """Commuting normal tuples move their joint spectrum by phi_X."""
        sampler = InstanceSampler(4)
        points = np.array([[0.1, 0.2j], [-0.3, 0.1]])
        W = sampler.unitary(2)
        T = RowContraction.from_matrices([W @ np.diag(points[:, i]) @ W.conj().T for i in range(2)])

        image = apply_automorphism(random_X, T)
        moved = np.array([phi(random_X, point) for point in points])
        for i in range(2):
            np.testing.assert_allclose(image.matrices[i], W @ np.diag(moved[:, i]) @ W.conj().T, atol=1e-12)

    def test_image_stays_row_contraction(self, random_X, random_T):
        """Strict rows stay strict."""
        assert apply_automorphism(random_X, random_T).strict


class TestIntertwiners:
    """Test the defect intertwiners."""

    def test_intertwiners_unitary(self, random_X, random_T):
        """Z and Z_* are unitary without polishing."""
        pair = defect_intertwiners(random_X, random_T)

        assert pair.Z.shape == (4, 4)
        assert pair.Z_star.shape == (2, 2)
        assert pair.residual < 1e-8
        assert not pair.polished

    def test_validate_polishes_small_defects(self):
        """Residuals between the limits are polished to a unitary."""
        Z, residual, polished = _validate_unitary("Z", (1 + 1e-7) * np.eye(2), 1e-8, 1e-6)

        assert polished
        assert residual > 1e-8
        np.testing.assert_allclose(Z, np.eye(2), atol=1e-14)

    def test_validate_rejects_large_defects(self):
        """Residuals above the hard limit raise."""
        with pytest.raises(IntertwinerError) as exc_info:
            _validate_unitary("Z", 0.5 * np.eye(2), 1e-8, 1e-6)
        assert exc_info.value.details["limit"] == 1e-6

    def test_validate_rejects_non_square(self):
        """Intertwiners between spaces of different dimension are impossible."""
        with pytest.raises(IntertwinerError):
            _validate_unitary("Z", np.ones((2, 3)), 1e-8, 1e-6)


class TestTransportLaw:
    """Test the transport of kernels and characteristic functions."""

    def test_transport_residuals_small(self, small_boost, random_T):
        """Both residuals are within the truncation tolerance."""
        result = theorem51_residuals(small_boost, random_T, 6, 2)

        assert result.res_theta < 1e-3
        assert result.res_k < 1e-3
        assert result.res_theta <= result.predicted_scale + 1e-10
        assert result.res_k <= result.predicted_scale + 1e-10

    def test_residuals_shrink_with_level(self, small_boost, random_T):
        """Raising N with a fixed top does not increase the residual."""
        coarse = theorem51_residuals(small_boost, random_T, 5, 2)
        fine = theorem51_residuals(small_boost, random_T, 7, 4)

        assert fine.res_theta <= coarse.res_theta + 1e-12

    def test_requires_strict(self, small_boost):
        """Non-strict rows are rejected."""
        T = RowContraction.from_matrices([np.eye(1), np.zeros((1, 1))])
        with pytest.raises(ContractionError):
            theorem51_residuals(small_boost, T, 4, 1)

    def test_conjugate_top(self, random_T):
        """Chunked conjugation matches the dense formula."""
        theta = char_function(random_T, 1.0, 2).sparse()
        rng = np.random.default_rng(0)
        W = rng.standard_normal((3, 7)) + 1j * rng.standard_normal((3, 7))
        Z_left, Z_right = np.eye(2), InstanceSampler(1).unitary(4)

        expected = np.kron(W, Z_left) @ theta.toarray() @ np.kron(W.conj().T, Z_right)
        np.testing.assert_allclose(conjugate_top(theta, W, Z_left, Z_right), expected, atol=1e-12)
        assert sp.issparse(theta)


class TestHyperbolicTransport:
    """Test the transport law for automorphisms far from a rotation."""

    @pytest.mark.parametrize(
        "X",
        [
            make_junitary("mobius", 2, mu=[0.3, 0.2j]),
            make_junitary("mobius", 2, mu=[-0.35, 0.1]),
            InstanceSampler(41).hyperbolic_junitary(2),
        ],
    )
    def test_residuals_within_coupling(self, X, random_T):
        """With the margin chosen from U_X, both residuals sit below the coupling and 1e-3."""
        assert ball_offset(X) >= 0.3
        margin = transport_margin(X, 2, 8, 2)
        result = theorem51_residuals(X, random_T, 8, margin)

        assert margin > 2
        assert result.predicted_scale <= 1e-3
        assert result.res_theta <= result.predicted_scale + 1e-10
        assert result.res_k <= result.predicted_scale + 1e-10
        assert result.res_theta < 1e-3

    def test_margin_grows_with_offset(self):
        """A larger |phi_X(0)| never needs fewer discarded levels."""
        margins = [
            transport_margin(make_junitary("mobius", 2, mu=[q, 0.0]), 2, 8, 2)
            for q in (0.05, 0.2, 0.4)
        ]

        assert margins == sorted(margins)
        assert margins[-1] > margins[0]

    def test_margin_respects_floor(self, small_boost):
        """The returned margin is never below the requested one."""
        assert transport_margin(small_boost, 2, 8, 5) >= 5

    def test_margin_rejects_out_of_range(self, small_boost):
        with pytest.raises(ValidationError):
            transport_margin(small_boost, 2, 6, 7)

    def test_scalar_mobius_bounded_at_saturation(self):
        """At N = 12, B = 3 the coupling for phi_X(0) = -0.6 is near one and still bounds the law."""
        X = make_junitary("mobius", 1, mu=[-0.6])
        T = RowContraction.from_matrices([[[0.6]]])
        result = theorem51_residuals(X, T, 12, 3)

        assert result.predicted_scale > 0.1
        assert result.res_theta <= result.predicted_scale + 1e-10

    def test_coupling_decays_with_fixed_top(self):
        """Growing N at a fixed top block shrinks the coupling and the residuals follow."""
        X = make_junitary("mobius", 1, mu=[-0.6])
        T = RowContraction.from_matrices([[[0.6]]])
        results = [theorem51_residuals(X, T, N, N - 5) for N in (20, 40, 60)]
        scales = [result.predicted_scale for result in results]

        assert scales[0] > scales[1] > scales[2]
        for result in results:
            assert result.res_theta <= result.predicted_scale + 1e-10
            assert result.res_k <= result.predicted_scale + 1e-10


class TestRealizationLaws:
    """Test the Redheffer realizations of the action."""

    def test_associativity(self, random_X):
        """(L_T o L_X) o L_r = L_T o (L_X o L_r)."""
        T = InstanceSampler(8).row_contraction(2, 1, max_norm=0.5)
        assert associativity_residual(random_X, T, 0.9, 2) < 1e-10

    def test_first_row(self, small_boost):
        """L_X o L_1 starts with U_X iota; its shift block matches U R U*."""
        first, second = first_row_residuals(small_boost, 2, 1, 5, 2)

        assert first < 1e-12
        assert second < 1e-3

    def test_shifted_realization(self, small_boost):
        """L_T o (L_X o L_1) has first row U K_T and U Theta_T U*."""
        T = InstanceSampler(12).row_contraction(2, 1, max_norm=0.5)
        res_theta, res_k = shifted_realization_residuals(small_boost, T, 4, 1)

        assert res_k < 1e-3
        assert res_theta < 1e-3
