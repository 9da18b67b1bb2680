"""Tests for contractions, defects and structured unitary blocks."""

import numpy as np
import pytest
import scipy.sparse as sp

from fockbench.exceptions import ContractionError, StructureError, ValidationError
from fockbench.fock import creation_matrices
from fockbench.linop import (
    Contraction,
    build_structured_unitary,
    closest_unitary,
    defect,
    factor_structured_unitary,
    isometry_residual,
    kron_apply,
    op_norm,
    polynomial_eval,
    psd_sqrt,
    row_block,
    row_norm,
    unitarity_residual,
)
from fockbench.redheffer import BlockSystem2x2
from fockbench.sampling import InstanceSampler
from fockbench.words import commutator_polynomial, word


class TestNorms:
    """Test norm helpers."""

    def test_op_norm(self):
        """Largest singular value, zero for empty input."""
        assert op_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
        assert op_norm(np.zeros((0, 3))) == 0.0
        assert op_norm(sp.identity(3, format="csr")) == pytest.approx(1.0)

    def test_residuals(self):
        """Isometry residual vanishes on isometries; unitarity needs a square matrix."""
        V = InstanceSampler(1).isometry(4, 2)

        assert isometry_residual(V) < 1e-12
        with pytest.raises(ValidationError):
            unitarity_residual(V)

    def test_closest_unitary(self):
        """The polar factor of a scaled unitary is the unitary."""
        U = InstanceSampler(2).unitary(3)
        np.testing.assert_allclose(closest_unitary(2.5 * U), U, atol=1e-12)

    def test_psd_sqrt_clamps_roundoff(self):
        """Tiny negative eigenvalues are treated as zero."""
        root, eigenvalues, _ = psd_sqrt(np.diag([4.0, -1e-17]))

        np.testing.assert_allclose(root, np.diag([2.0, 0.0]), atol=1e-15)
        assert eigenvalues.min() == 0.0


class TestRows:
    """Test row blocks and word polynomials."""

    def test_row_block(self):
        """Entries are placed side by side."""
        row = row_block([np.eye(2), 2 * np.eye(2)])

        assert row.shape == (2, 4)
        assert row_norm([0.6 * np.eye(2), 0.8 * np.eye(2)]) == pytest.approx(1.0)

    @pytest.mark.parametrize("matrices", [[], [np.eye(2), np.eye(3)], [np.ones((2, 3))]])
    def test_row_block_invalid(self, matrices):
        """Empty, mismatched or non-square rows raise."""
        with pytest.raises(ValidationError):
            row_block(matrices)

    def test_polynomial_word_order(self):
        """A_12 = A_1 A_2."""
        A1 = np.array([[0, 1], [0, 0]], dtype=complex)
        A2 = np.array([[1, 0], [0, 2]], dtype=complex)

        np.testing.assert_allclose(polynomial_eval({word(1, 2, n=2): 1.0}, [A1, A2]), A1 @ A2)
        np.testing.assert_allclose(polynomial_eval({word(n=2): 3.0}, [A1, A2]), 3 * np.eye(2))

    def test_commutator_of_creation_operators(self):
        """Creation operators do not commute; diagonal matrices do."""
        poly = commutator_polynomial(1, 2, 2)

        assert op_norm(polynomial_eval(poly, creation_matrices("left", 2, 3, sparse=True))) > 0.5
        diagonals = [np.diag([1.0, 2.0]), np.diag([3.0, -1.0])]
        assert op_norm(polynomial_eval(poly, diagonals)) == 0.0

    def test_polynomial_letter_out_of_range(self):
        """Words need one operator per letter."""
        with pytest.raises(ValidationError):
            polynomial_eval({word(3, n=3): 1.0}, [np.eye(2), np.eye(2)])


class TestDefects:
    """Test contraction certificates and defect spaces."""

    def test_scalar_defect(self):
        """C = 0.6 has D = 0.8 and full defect."""
        data = defect(0.6)

        np.testing.assert_allclose(data.operator, [[0.8]])
        assert data.rank == 1
        assert data.full

    def test_isometry_has_no_defect(self):
        """Isometries have zero defect space."""
        data = defect(InstanceSampler(4).isometry(3, 2))

        assert data.rank == 0
        assert data.dim == 2

    def test_partial_defect_basis(self):
        """The defect basis spans the non-isometric directions."""
        data = defect(np.diag([1.0, 0.6]))

        assert data.rank == 1
        np.testing.assert_allclose(np.abs(data.basis.ravel()), [0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(data.embedding() @ data.coordinates(), data.operator @ data.operator, atol=1e-12)

    def test_not_a_contraction(self):
        """Norm above 1 + tol raises ContractionError."""
        with pytest.raises(ContractionError) as exc_info:
            Contraction.of(np.diag([1.5, 0.2]))
        assert exc_info.value.details["norm"] == pytest.approx(1.5)

    def test_contraction_is_read_only(self):
        """Certified matrices are frozen."""
        contraction = Contraction.of([[0.1, 0.2]])
        assert contraction.shape == (1, 2)
        with pytest.raises(ValueError):
            contraction.matrix[0, 0] = 0.5


class TestStructuredUnitary:
    """Test the structured unitary blocks."""

    def test_scalar_block(self):
        """A = 0.6 with trivial Z gives the rotation [[.8, -.6], [.6, .8]]."""
        J = build_structured_unitary(0.6, 1.0, 1.0)

        np.testing.assert_allclose(J.matrix(), [[0.8, -0.6], [0.6, 0.8]])

    def test_random_block_is_unitary(self):
        """Random A with random defect unitaries gives a unitary block."""
        sampler = InstanceSampler(6)
        A = sampler.contraction(2, 3, norm=0.7)
        J = build_structured_unitary(A, sampler.unitary(2), sampler.unitary(3))

        assert unitarity_residual(J.matrix()) < 1e-10
        np.testing.assert_allclose(J.C, A.conj().T)

    def test_factor_recovers_data(self):
        """factor_structured_unitary inverts build_structured_unitary."""
        sampler = InstanceSampler(8)
        A = sampler.contraction(3, 2, norm=0.5)
        Z_star, Z = sampler.unitary(3), sampler.unitary(2)

        factors = factor_structured_unitary(build_structured_unitary(A, Z_star, Z))
        np.testing.assert_allclose(factors.A.matrix, A, atol=1e-12)
        np.testing.assert_allclose(factors.Z, Z, atol=1e-10)
        np.testing.assert_allclose(factors.Z_star, Z_star, atol=1e-10)
        assert factors.residual < 1e-10

    def test_wrong_defect_unitary_size(self):
        """Z must act on the defect coordinates."""
        with pytest.raises(StructureError):
            build_structured_unitary(0.6, np.eye(2), 1.0)

    def test_non_unitary_z(self):
        """Non-unitary intertwiners are rejected."""
        with pytest.raises(StructureError):
            build_structured_unitary(0.6, 1.0, 0.5)

    def test_factor_rejects_non_unitary(self):
        """Only unitary blocks can be factored."""
        with pytest.raises(StructureError):
            factor_structured_unitary(BlockSystem2x2.from_blocks(0.5, 0, 0, 0.5))

    def test_kron_apply(self):
        """Matches the explicit Kronecker product."""
        rng = np.random.default_rng(0)
        A, B, M = rng.standard_normal((3, 2)), rng.standard_normal((4, 5)), rng.standard_normal((10, 3))

        np.testing.assert_allclose(kron_apply(A, B, M), np.kron(A, B) @ M)
