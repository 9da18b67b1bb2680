"""
Constrained objects on the truncated Fock space.

A two-sided polynomial ideal J gives M_J = closure(J F) and N_J = F - M_J.
N_J is invariant under every L_i^* and R_i^*, and the constrained creation
operators, Poisson kernel and characteristic function are compressions to
N_J. For the commutator ideal N_J is the symmetric Fock space, spanned by
the eigenvectors nu_lambda, and the constraint on T is commutativity.

Ranks are certified at the truncation level only: the closure is the
smallest subspace of F_N containing p(L) e_w and invariant under the
truncated L_i and R_i.
"""

import logging
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict

from .autgroup import (
    FockAutomorphism,
    JUnitary,
    ball_offset,
    implementing_unitary,
    truncation_coupling,
)
from .config import get_settings
from .exceptions import ConstraintError, ContractionError, ValidationError
from .fock import (
    TruncatedFock,
    creation_matrices,
    creation_matrix,
    fock_dim,
    nu_lambda,
    vacuum_embedding,
)
from .linop import kron_apply, op_norm, polynomial_eval
from .rowcon import RowContraction, char_function, functional_calculus, poisson_kernel
from .transform import TransportResiduals, apply_inverse_automorphism, transport_residuals
from .words import (
    Polynomial,
    commutator_polynomial,
    level_offset,
    polynomial_degree,
    polynomial_to_dict,
    word_at,
)

logger = logging.getLogger(__name__)

PROVENANCES = ("commutator", "generated", "explicit")


class ConstraintSubspace(BaseModel):
    """
    Orthonormal basis of N_J inside F_N.

    When graded, columns are sorted by Fock level and column_levels records
    the level of each column.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    basis: np.ndarray
    n: int
    N: int
    provenance: str
    # Polynomials {Word: coefficient}
    generators: List[Any] = []
    column_levels: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def graded(self) -> bool:
        return self.column_levels is not None

    def projection(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def top_count(self, max_level: int) -> int:
        """Number of basis columns living on levels <= max_level."""
        if not self.graded:
            raise ValidationError(
                "Level blocks of an ungraded subspace are undefined",
                field="provenance",
                value=self.provenance,
            )
        return int(np.count_nonzero(self.column_levels <= max_level))

    def top_basis(self, max_level: int) -> np.ndarray:
        """Basis of N_J on levels <= max_level, restricted to those rows."""
        size = fock_dim(self.n, min(max_level, self.N))
        return self.basis[:size, : self.top_count(max_level)]

    def invariance_residuals(self) -> Dict[str, float]:
        """max_i ||(I - P) A_i^* P|| for the left and right creations."""
        residuals = {}
        for side in ("left", "right"):
            worst = 0.0
            for A in creation_matrices(side, self.n, self.N, sparse=True):
                image = np.asarray(A.conj().T @ self.basis)
                leak = image - self.basis @ (self.basis.conj().T @ image)
                worst = max(worst, op_norm(leak))
            residuals[side] = worst
        return residuals

    def to_dict(self, include_basis: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "provenance": self.provenance,
            "n": self.n,
            "N": self.N,
            "rank": self.rank,
        }
        if self.generators:
            data["generators"] = [polynomial_to_dict(p) for p in self.generators]
        if include_basis:
            data["basis"] = {"re": self.basis.real.tolist(), "im": self.basis.imag.tolist()}
        return data


def commutator_generators(n: int) -> List[Polynomial]:
    """L_i L_j - L_j L_i for i < j."""
    return [
        commutator_polynomial(i, j, n) for i in range(1, n + 1) for j in range(i + 1, n + 1)
    ]


def _level_letters(n: int, k: int) -> np.ndarray:
    """Letters (0-based) of every level-k word, one row per word in basis order."""
    positions = np.arange(n**k)
    digits = [(positions // n ** (k - 1 - j)) % n for j in range(k)]
    return np.stack(digits, axis=1) if k else np.zeros((1, 0), dtype=int)


@lru_cache(maxsize=16)
def _symmetric_basis(n: int, N: int) -> Tuple[np.ndarray, np.ndarray]:
    dim = fock_dim(n, N)
    rows, cols, values, levels = [], [], [], []
    column = 0
    for k in range(N + 1):
        letters = _level_letters(n, k)
        counts = np.stack([(letters == a).sum(axis=1) for a in range(n)], axis=1)
        _, classes = np.unique(counts, axis=0, return_inverse=True)
        classes = np.asarray(classes).ravel()
        sizes = np.bincount(classes)
        rows.append(level_offset(n, k) + np.arange(n**k))
        cols.append(column + classes)
        values.append(1 / np.sqrt(sizes[classes]))
        levels.append(np.full(sizes.size, k))
        column += sizes.size
    basis = sp.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, column),
    ).toarray().astype(complex)
    column_levels = np.concatenate(levels)
    basis.setflags(write=False)
    column_levels.setflags(write=False)
    return basis, column_levels


def symmetrizer(n: int, N: int) -> ConstraintSubspace:
    """
    The symmetric Fock space: N_J for the commutator ideal.

    One basis vector per letter multiset, the normalized sum of the e_w with
    that multiset; at level k there are C(k + n - 1, n - 1) of them.
    """
    TruncatedFock(n=n, N=N)
    basis, column_levels = _symmetric_basis(n, N)
    return ConstraintSubspace(
        basis=basis,
        n=n,
        N=N,
        provenance="commutator",
        generators=commutator_generators(n),
        column_levels=column_levels,
    )


def _check_generators(generators: Sequence[Polynomial], n: int) -> None:
    if not generators:
        raise ConstraintError("At least one generator is required")
    for index, p in enumerate(generators):
        if not p or all(abs(c) == 0 for c in p.values()):
            raise ConstraintError(f"Generator {index} is the zero polynomial")
        for w in p:
            if w.n != n:
                raise ValidationError(
                    f"Generator {index} uses words over {w.n} letters, expected {n}",
                    field="generators",
                    value=str(w),
                )


def _graded_complement(
    ideal: np.ndarray, n: int, N: int, rank_tol: float
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Level-sorted basis of the orthocomplement, or None if the ideal is not graded."""
    fock = TruncatedFock(n=n, N=N)
    pieces = []
    for k in range(N + 1):
        block = ideal[fock.level_slice(k)]
        pieces.append(scipy.linalg.orth(block, rcond=rank_tol) if block.size else block)
    if sum(piece.shape[1] for piece in pieces) != ideal.shape[1]:
        return None
    columns, levels = [], []
    for k, piece in enumerate(pieces):
        size = n**k
        complement = (
            scipy.linalg.null_space(piece.conj().T, rcond=rank_tol)
            if piece.shape[1]
            else np.eye(size, dtype=complex)
        )
        padded = np.zeros((fock.dim, complement.shape[1]), dtype=complex)
        padded[fock.level_slice(k)] = complement
        columns.append(padded)
        levels.append(np.full(complement.shape[1], k))
    return np.hstack(columns), np.concatenate(levels)


def ideal_subspace(
    generators: Sequence[Polynomial],
    n: int,
    N: int,
    max_rounds: Optional[int] = None,
    rank_tol: Optional[float] = None,
) -> ConstraintSubspace:
    """
    N_J for the ideal generated by polynomial generators.

    M_J is grown from the ranges of p(L) by applying the truncated L_i and
    R_i until the rank stops increasing.

    Raises:
        ConstraintError: For zero generators, a rank that drops between
            rounds, or no convergence within max_rounds
    """
    _check_generators(generators, n)
    rank_tol = get_settings().rank_tol if rank_tol is None else rank_tol
    dim = fock_dim(n, N)
    max_rounds = dim if max_rounds is None else max_rounds
    lefts = creation_matrices("left", n, N, sparse=True)
    rights = creation_matrices("right", n, N, sparse=True)

    seeds = [np.asarray(sp.csr_matrix(polynomial_eval(p, lefts)).toarray()) for p in generators]
    ideal = scipy.linalg.orth(np.hstack(seeds), rcond=rank_tol)
    rank = ideal.shape[1]
    for round_index in range(max_rounds):
        if rank in (0, dim):
            break
        images = [ideal] + [np.asarray(A @ ideal) for A in lefts + rights]
        grown = scipy.linalg.orth(np.hstack(images), rcond=rank_tol)
        if grown.shape[1] < rank:
            raise ConstraintError(
                f"Closure rank dropped from {rank} to {grown.shape[1]} in round {round_index}"
            )
        ideal = grown
        if grown.shape[1] == rank:
            break
        rank = grown.shape[1]
    else:
        raise ConstraintError(f"Closure did not stabilize within {max_rounds} rounds")

    logger.debug(f"Ideal closure in F_{N} (n={n}) has rank {ideal.shape[1]}")
    graded = _graded_complement(ideal, n, N, rank_tol)
    if graded is None:
        basis = scipy.linalg.null_space(ideal.conj().T, rcond=rank_tol)
        column_levels = None
    else:
        basis, column_levels = graded
    return ConstraintSubspace(
        basis=basis.astype(complex),
        n=n,
        N=N,
        provenance="generated",
        generators=list(generators),
        column_levels=column_levels,
    )


def explicit_subspace(
    basis: np.ndarray, n: int, N: int, rank_tol: Optional[float] = None
) -> ConstraintSubspace:
    """Wrap a user-supplied spanning set, orthonormalized."""
    rank_tol = get_settings().rank_tol if rank_tol is None else rank_tol
    spanning = np.atleast_2d(np.asarray(basis, dtype=complex))
    if spanning.shape[0] != fock_dim(n, N):
        raise ValidationError(
            f"Basis has {spanning.shape[0]} rows, expected {fock_dim(n, N)}",
            field="basis",
            value=list(spanning.shape),
        )
    return ConstraintSubspace(
        basis=scipy.linalg.orth(spanning, rcond=rank_tol),
        n=n,
        N=N,
        provenance="explicit",
    )


def constrained_creation(S: ConstraintSubspace, side: str, i: int) -> np.ndarray:
    """The compression P_N A_i|N of a truncated creation operator."""
    A = creation_matrix(side, i, S.n, S.N, sparse=True)
    return S.basis.conj().T @ np.asarray(A @ S.basis)


def constraint_norm(T: RowContraction, S: ConstraintSubspace) -> float:
    """max ||p(T)|| over the generators of the constraint."""
    return max((op_norm(functional_calculus(p, T)) for p in S.generators), default=0.0)


def validate_constraint(
    T: RowContraction, S: ConstraintSubspace, tol: Optional[float] = None
) -> float:
    """
    Check that p(T) = 0 for every generator p.

    Raises:
        ConstraintError: If some ||p(T)|| exceeds tol
    """
    tol = get_settings().law_tol if tol is None else tol
    worst = constraint_norm(T, S)
    if worst > tol:
        raise ConstraintError(
            f"Row contraction violates the {S.provenance} constraint (max |p(T)| = {worst:.3e})",
            max_norm=worst,
            tol=tol,
        )
    return worst


def _check_level(S: ConstraintSubspace, N: int) -> None:
    if S.N != N:
        raise ValidationError(
            f"Constraint subspace lives in F_{S.N}, not F_{N}", field="N", value=N
        )


def constrained_poisson(
    T: RowContraction, S: ConstraintSubspace, r: float, N: int
) -> np.ndarray:
    """K_{J,T} = (P_N (x) I) K_T in the coordinates of the basis of N_J."""
    _check_level(S, N)
    validate_constraint(T, S)
    K = poisson_kernel(T, r, N)
    d_star = T.defect_dims[1]
    return kron_apply(S.basis.conj().T, np.eye(d_star), K)


def constrained_char(
    T: RowContraction, S: ConstraintSubspace, r: float, N: int
) -> np.ndarray:
    """Theta_{J,T} = (P_N (x) I) Theta_T restricted to N_J (x) D_T, in basis coordinates."""
    _check_level(S, N)
    validate_constraint(T, S)
    d, d_star = T.defect_dims
    Q = sp.csr_matrix(S.basis)
    theta = (
        sp.kron(Q.conj().T, sp.identity(d_star), format="csr")
        @ char_function(T, r, N).sparse()
        @ sp.kron(Q, sp.identity(d), format="csr")
    )
    return theta.toarray()


def invariance_residual(
    S: ConstraintSubspace, X: JUnitary, N: int, margin: int
) -> Tuple[float, float]:
    """
    ||P_M^perp U_X P_M|| on levels <= N - margin, with the coupling of those rows.

    Requires a graded subspace.
    """
    _check_level(S, N)
    top = N - margin
    U_top = implementing_unitary(X, S.n, N, rows_level=top)
    image = U_top @ S.basis
    Q_top = S.top_basis(top)
    leak = image - Q_top @ (Q_top.conj().T @ image)
    return op_norm(leak), truncation_coupling(U_top)


def theorem62_residuals(
    X: JUnitary, T: RowContraction, S: ConstraintSubspace, N: int, margin: int
) -> TransportResiduals:
    """
    The constrained transport law on N_J at levels <= N - margin.

    Both sides are compressed to the same N_J, which assumes Phi_X maps the
    ideal onto itself. That holds for the commutator ideal; for other
    constraints the U_X-invariance of N_J is checked first.

    Raises:
        ConstraintError: If T violates the constraint or N_J is not invariant
        ContractionError: If T is not strict
    """
    _check_level(S, N)
    validate_constraint(T, S)
    if not T.strict:
        raise ContractionError(
            "The constrained transport law is checked for strict row contractions only",
            norm=T.row_norm,
            tol=T.tol,
        )
    if S.provenance != "commutator":
        leak, _ = invariance_residual(S, X, N, margin)
        tol = get_settings().theorem_tol
        if leak > tol:
            raise ConstraintError(
                f"N_J is not invariant under U_X (residual {leak:.3e})",
                max_norm=leak,
                tol=tol,
            )
    top = N - margin
    return transport_residuals(
        X, T, N, margin, basis=S.basis, top_basis=S.top_basis(top)
    )


def transported_constraint_norm(X: JUnitary, T: RowContraction, S: ConstraintSubspace) -> float:
    """max ||p(Phi_X^{-1}(T))|| over the generators; zero when the ideal is Phi_X-invariant."""
    return constraint_norm(apply_inverse_automorphism(X, T), S)


def transported_polynomial(X: JUnitary, f: Polynomial, N: int) -> np.ndarray:
    """
    Fourier coefficients of Phi_X^{-1}(f) = f(Phi_{X^{-1}}(L)), read from its e_empty column.
    """
    automorphism = FockAutomorphism(JUnitary.of(X).inverse(), N)
    vacuum = vacuum_embedding(automorphism.n, N)
    column = np.zeros_like(vacuum)
    for w, coefficient in f.items():
        image = vacuum
        for letter in reversed(w.letters):
            image = automorphism.apply_image(letter, image)
        column = column + coefficient * image
    return column[:, 0]


def transported_polynomial_residual(
    X: JUnitary, T: RowContraction, f: Polynomial, N: int
) -> Tuple[float, float]:
    """
    ||f(T') - rho_T(Phi_X^{-1}(f))|| with T' = Phi_X^{-1}(T).

    The right side sums the Fourier series of Phi_X^{-1}(f) up to level N.
    Returns the residual and the scale (q rho)^(N + 1 - deg f).
    """
    X = JUnitary.of(X)
    coefficients = transported_polynomial(X, f, N)
    series = {word_at(i, T.n, N): c for i, c in enumerate(coefficients) if c != 0}
    left = functional_calculus(f, apply_inverse_automorphism(X, T))
    right = functional_calculus(series, T)
    exponent = max(N + 1 - polynomial_degree(f), 0)
    return op_norm(left - right), (ball_offset(X) * T.row_norm) ** exponent


def subspace_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Sine of the largest principal angle; 1 when the dimensions differ."""
    if A.shape[1] != B.shape[1]:
        return 1.0
    if A.shape[1] == 0:
        return 0.0
    return float(np.sin(np.max(scipy.linalg.subspace_angles(A, B))))


def nu_span(
    points: Sequence[Sequence[complex]], n: int, N: int, rank_tol: float = 1e-10
) -> np.ndarray:
    """Orthonormal basis of span{nu_lambda} over the given points."""
    vectors = np.stack([nu_lambda(lam, n, N) for lam in points], axis=1)
    return scipy.linalg.orth(vectors, rcond=rank_tol)


def nu_span_rank(
    n: int, N: int, samples: int, rng: np.random.Generator, rank_tol: float = 1e-10
) -> Tuple[int, np.ndarray]:
    """
    Numerical rank of span{nu_lambda} over random ball points, with its basis.

    Points are drawn with radius in [0.3, 0.9] so no level is numerically lost.
    """
    points = []
    for _ in range(samples):
        direction = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        points.append(direction / np.linalg.norm(direction) * rng.uniform(0.3, 0.9))
    basis = nu_span(points, n, N, rank_tol=rank_tol)
    return basis.shape[1], basis
