"""Tests for constraint subspaces and the constrained transport law."""

import numpy as np
import pytest

from fockbench.autgroup import ball_offset, make_junitary
from fockbench.exceptions import ConstraintError, ValidationError
from fockbench.fock import fock_dim
from fockbench.linop import op_norm
from fockbench.constrained import (
    commutator_generators,
    constrained_char,
    constrained_creation,
    constrained_poisson,
    constraint_norm,
    explicit_subspace,
    ideal_subspace,
    invariance_residual,
    nu_span_rank,
    subspace_distance,
    symmetrizer,
    theorem62_residuals,
    transported_constraint_norm,
    transported_polynomial_residual,
    validate_constraint,
)
from fockbench.rowcon import poisson_kernel
from fockbench.sampling import InstanceSampler
from fockbench.transform import transport_margin
from fockbench.words import word


@pytest.fixture
def commuting_T():
    return InstanceSampler(29).commuting_row(2, 2, max_norm=0.5)


@pytest.fixture
def free_T():
    return InstanceSampler(30).row_contraction(2, 2, max_norm=0.5)


@pytest.fixture
def small_boost():
    return make_junitary("mobius", 2, mu=[0.04j, -0.03])


class TestSymmetrizer:
    """Test the symmetric Fock space."""

    @pytest.mark.parametrize("n,N,rank", [(1, 4, 5), (2, 3, 10), (3, 2, 10), (3, 3, 20)])
    def test_rank(self, n, N, rank):
        """One basis vector per letter multiset."""
        assert symmetrizer(n, N).rank == rank

    def test_orthonormal_and_graded(self):
        """Columns are orthonormal and sorted by level."""
        S = symmetrizer(2, 3)

        np.testing.assert_allclose(S.basis.conj().T @ S.basis, np.eye(S.rank), atol=1e-14)
        assert S.graded
        assert S.column_levels.tolist() == [0, 1, 1, 2, 2, 2, 3, 3, 3, 3]
        assert S.top_count(1) == 3
        assert S.top_basis(1).shape == (3, 3)

    def test_coinvariant(self):
        """The symmetric space is invariant under every L_i^* and R_i^*."""
        residuals = symmetrizer(3, 3).invariance_residuals()

        assert residuals["left"] < 1e-14
        assert residuals["right"] < 1e-14

    def test_compressions_commute(self):
        """Compressed creation operators commute."""
        S = symmetrizer(2, 4)
        A1 = constrained_creation(S, "left", 1)
        A2 = constrained_creation(S, "left", 2)

        assert op_norm(A1 @ A2 - A2 @ A1) < 1e-12

    def test_to_dict(self):
        """Serialized form carries provenance, rank and generators."""
        data = symmetrizer(2, 2).to_dict()

        assert data["provenance"] == "commutator"
        assert data["rank"] == 6
        assert data["generators"] == [{"12": [1.0, 0.0], "21": [-1.0, 0.0]}]


class TestIdealSubspace:
    """Test closures of polynomial ideals."""

    def test_commutator_ideal_matches_symmetrizer(self):
        """The generated closure agrees with the explicit symmetric basis."""
        generated = ideal_subspace(commutator_generators(2), 2, 3)
        explicit = symmetrizer(2, 3)

        assert generated.provenance == "generated"
        assert generated.graded
        assert generated.rank == explicit.rank
        assert subspace_distance(generated.basis, explicit.basis) < 1e-10

    def test_monomial_ideal(self):
        """The ideal of L_1 leaves only the words 2...2."""
        S = ideal_subspace([{word(1, n=2): 1.0}], 2, 3)

        assert S.rank == 4
        assert S.column_levels.tolist() == [0, 1, 2, 3]

    def test_invalid_generators(self):
        """Empty lists, zero polynomials and foreign alphabets are rejected."""
        with pytest.raises(ConstraintError):
            ideal_subspace([], 2, 2)
        with pytest.raises(ConstraintError):
            ideal_subspace([{word(1, n=2): 0.0}], 2, 2)
        with pytest.raises(ValidationError):
            ideal_subspace([{word(1, n=3): 1.0}], 2, 2)

    def test_explicit_subspace(self):
        """Spanning sets are orthonormalized and left ungraded."""
        spanning = np.zeros((7, 2))
        spanning[0, 0] = 2.0
        spanning[0, 1] = 1.0
        S = explicit_subspace(spanning, 2, 2)

        assert S.rank == 1
        assert not S.graded
        with pytest.raises(ValidationError):
            S.top_count(1)

    def test_explicit_subspace_wrong_rows(self):
        with pytest.raises(ValidationError):
            explicit_subspace(np.eye(3), 2, 2)

    def test_nu_span(self):
        """span{nu_lambda} is the symmetric Fock space."""
        rank, basis = nu_span_rank(2, 3, 30, np.random.default_rng(4))

        assert rank == 10
        assert subspace_distance(basis, symmetrizer(2, 3).basis) < 1e-6

    def test_subspace_distance_dimension_mismatch(self):
        assert subspace_distance(np.eye(3)[:, :1], np.eye(3)[:, :2]) == 1.0


class TestConstraints:
    """Test constraint validation on row contractions."""

    def test_commuting_row_satisfies(self, commuting_T):
        """Commuting tuples pass the commutator constraint."""
        assert validate_constraint(commuting_T, symmetrizer(2, 3)) < 1e-12

    def test_free_row_violates(self, free_T):
        """Generic rows do not commute."""
        S = symmetrizer(2, 3)
        assert constraint_norm(free_T, S) > 1e-6
        with pytest.raises(ConstraintError):
            validate_constraint(free_T, S)

    def test_constrained_shapes(self, commuting_T):
        """Compressions use basis coordinates of N_J."""
        S = symmetrizer(2, 3)
        d, d_star = commuting_T.defect_dims

        assert constrained_poisson(commuting_T, S, 1.0, 3).shape == (S.rank * d_star, 2)
        assert constrained_char(commuting_T, S, 1.0, 3).shape == (S.rank * d_star, S.rank * d)

    def test_level_mismatch(self, commuting_T):
        with pytest.raises(ValidationError):
            constrained_poisson(commuting_T, symmetrizer(2, 3), 1.0, 4)

    def test_constrained_kernel_is_compression(self, commuting_T):
        """For symmetric rows the kernel already lives in N_J (x) D_T*."""
        S = symmetrizer(2, 4)
        compressed = constrained_poisson(commuting_T, S, 1.0, 4)
        d_star = commuting_T.defect_dims[1]

        full = poisson_kernel(commuting_T, 1.0, 4)
        assert np.linalg.norm(compressed) == pytest.approx(np.linalg.norm(full), rel=1e-10)
        assert compressed.shape[0] == S.rank * d_star


class TestConstrainedTransport:
    """Test the transport law on N_J."""

    def test_invariance(self, small_boost):
        """U_X maps the symmetric space into itself up to the tail."""
        leak, scale = invariance_residual(symmetrizer(2, 5), small_boost, 5, 2)

        assert leak < 1e-3
        assert leak <= scale + 1e-10

    def test_residuals_small(self, small_boost, commuting_T):
        """Constrained transport holds at the truncation tolerance."""
        result = theorem62_residuals(small_boost, commuting_T, symmetrizer(2, 5), 5, 2)

        assert result.res_theta < 1e-3
        assert result.res_k < 1e-3
        assert result.res_theta <= result.predicted_scale + 1e-10

    def test_hyperbolic_residuals(self, commuting_T):
        """For |phi_X(0)| >= 0.3 the adapted margin keeps the compressed law below 1e-3."""
        X = InstanceSampler(43).hyperbolic_junitary(2)
        margin = transport_margin(X, 2, 7, 2)
        result = theorem62_residuals(X, commuting_T, symmetrizer(2, 7), 7, margin)

        assert ball_offset(X) >= 0.3
        assert margin > 2
        assert result.res_theta < 1e-3
        assert result.res_k < 1e-3
        assert result.res_k <= result.predicted_scale + 1e-10

    def test_rejects_unconstrained_row(self, small_boost, free_T):
        with pytest.raises(ConstraintError):
            theorem62_residuals(small_boost, free_T, symmetrizer(2, 4), 4, 1)

    def test_constraint_is_transported(self, small_boost, commuting_T):
        """Phi_X^{-1} keeps commuting rows commuting."""
        assert transported_constraint_norm(small_boost, commuting_T, symmetrizer(2, 2)) < 1e-12

    def test_transported_polynomial(self, small_boost, free_T):
        """f(Phi_X^{-1}(T)) is the Fourier series of Phi_X^{-1}(f) at T."""
        f = {word(1, 2, n=2): 1.0, word(n=2): -0.5}
        residual, scale = transported_polynomial_residual(small_boost, free_T, f, 8)

        assert residual < 1e-8
        assert scale < 1e-8
