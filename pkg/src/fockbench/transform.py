"""
Action of ball automorphisms on row contractions.

Phi_X(T) = alpha_{L_Y}(T) with Y the unitary form of X, and
Phi_X^{-1}(T) = alpha_{L_{Y*}}(T). The transport law relates the Poisson
kernels and characteristic functions of T and T' = Phi_X^{-1}(T):

    K_{T'}     = (U_X (x) Z_*^*) K_T
    Theta_{T'} = (U_X (x) Z_*^*) Theta_T (U_X^* (x) Z)

for unitaries Z: D_{T'} -> D_T and Z_*: D_{T'*} -> D_{T*}. On a truncated
space the identities carry a tail from U_X^*, so they are measured on the
block of levels <= N - margin, where that tail is geometrically small.
"""

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict

from .autgroup import (
    JUnitary,
    UnitaryForm,
    coupling_profile,
    implementing_unitary,
    system_on_coefficients,
    system_on_fock,
    truncation_coupling,
    unitary_form,
)
from .config import get_settings
from .exceptions import ContractionError, IntertwinerError, ValidationError
from .fock import creation_matrices, fock_dim
from .linop import closest_unitary, kron_apply, op_norm, unitarity_residual
from .redheffer import alpha, redheffer_product
from .rowcon import (
    RowContraction,
    char_function,
    fock_structured_system,
    poisson_kernel,
    shift_system,
)

logger = logging.getLogger(__name__)

# Upper bound on the dense scratch block used when conjugating Theta
_CHUNK_ENTRIES = 1 << 21


def _act(Y: UnitaryForm, T: RowContraction) -> RowContraction:
    row = alpha(system_on_coefficients(Y, T.m), T.row)
    return RowContraction.from_matrices(
        [row[:, i * T.m : (i + 1) * T.m] for i in range(T.n)], tol=T.tol
    )


def apply_automorphism(X: JUnitary, T: RowContraction) -> RowContraction:
    """
    Phi_X(T): the row b (x) I + a T (I - (c (x) I) T)^{-1} (d (x) I).

    Raises:
        WellPosednessError: If I - T (c (x) I) is numerically singular
    """
    return _act(unitary_form(X), T)


def apply_inverse_automorphism(X: JUnitary, T: RowContraction) -> RowContraction:
    """Phi_X^{-1}(T) = alpha_{L_{Y*}}(T)."""
    return _act(unitary_form(X).adjoint(), T)


class IntertwinerPair(BaseModel):
    """Unitaries Z: D_{T'} -> D_T and Z_*: D_{T'*} -> D_{T*} in defect coordinates."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Z: np.ndarray
    Z_star: np.ndarray
    residual_Z: float
    residual_Z_star: float
    polished: bool = False

    @property
    def residual(self) -> float:
        return max(self.residual_Z, self.residual_Z_star)


def _validate_unitary(
    name: str, Z: np.ndarray, soft: float, hard: float
) -> Tuple[np.ndarray, float, bool]:
    if Z.shape[0] != Z.shape[1]:
        raise IntertwinerError(
            f"{name} maps between defect spaces of different dimensions {Z.shape}",
            limit=hard,
        )
    residual = unitarity_residual(Z)
    if residual <= soft:
        return Z, residual, False
    if residual <= hard:
        logger.info(f"Polishing {name} (unitarity residual {residual:.3e})")
        return closest_unitary(Z), residual, True
    raise IntertwinerError(
        f"{name} is not unitary (residual {residual:.3e})", residual=residual, limit=hard
    )


def defect_intertwiners(
    X: JUnitary,
    T: RowContraction,
    tol: Optional[float] = None,
    hard_limit: Optional[float] = None,
) -> IntertwinerPair:
    """
    The defect intertwiners for T' = Phi_X^{-1}(T).

    Z_* D_{T'*} = D_{T*} (I - b T^*)^{-1} a and
    Z D_{T'} = D_T (I - (b^* (x) I) T)^{-1} (d^* (x) I), both read in defect
    bases and solved with pseudo-inverses. Residuals between tol and
    hard_limit are polished to the closest unitary.

    Raises:
        IntertwinerError: If either map misses unitarity by more than hard_limit
    """
    settings = get_settings()
    tol = settings.intertwiner_tol if tol is None else tol
    hard_limit = settings.intertwiner_hard_limit if hard_limit is None else hard_limit

    Y = unitary_form(X)
    T_prime = apply_inverse_automorphism(X, T)
    m, n = T.m, T.n
    eye_m = np.eye(m, dtype=complex)
    eye_nm = np.eye(n * m, dtype=complex)

    b_T_star = np.kron(Y.b, eye_m) @ T.row.conj().T
    star_side = T.defect_T_star.coordinates() @ np.linalg.solve(eye_m - b_T_star, eye_m) * Y.a
    Z_star = star_side @ scipy.linalg.pinv(T_prime.defect_T_star.coordinates())

    b_adj = np.kron(Y.b.conj().T, eye_m)
    d_adj = np.kron(Y.d.conj().T, eye_m)
    loop = eye_nm - b_adj @ T.row
    right_inverse = scipy.linalg.pinv(T_prime.defect_T.coordinates())
    Z = T.defect_T.coordinates() @ np.linalg.solve(loop, d_adj) @ right_inverse

    if settings.debug:
        printed = T.defect_T.coordinates() @ loop @ d_adj @ right_inverse
        if printed.shape[0] == printed.shape[1]:
            logger.debug(
                f"Uninverted Z variant has unitarity residual {unitarity_residual(printed):.3e}"
            )

    Z_star, residual_star, polished_star = _validate_unitary("Z_star", Z_star, tol, hard_limit)
    Z, residual_Z, polished_Z = _validate_unitary("Z", Z, tol, hard_limit)
    return IntertwinerPair(
        Z=Z,
        Z_star=Z_star,
        residual_Z=residual_Z,
        residual_Z_star=residual_star,
        polished=polished_star or polished_Z,
    )


class TransportResiduals(BaseModel):
    """Residuals of the transport law on levels <= N - margin."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    res_theta: float
    res_k: float
    predicted_scale: float
    N: int
    margin: int
    intertwiners: IntertwinerPair


def conjugate_top(
    theta: sp.csr_matrix,
    W: np.ndarray,
    Z_left: np.ndarray,
    Z_right: np.ndarray,
) -> np.ndarray:
    """
    (W (x) Z_left) Theta (W^* (x) Z_right), with W a short wide matrix.

    Theta is applied to column chunks of W^* (x) Z_right so the dense scratch
    stays bounded.
    """
    W_adj = W.conj().T
    rows = theta.shape[0]
    width = max(Z_right.shape[1], 1)
    chunk = max(1, _CHUNK_ENTRIES // max(rows * width, 1))
    blocks = []
    for start in range(0, W_adj.shape[1], chunk):
        right = np.kron(W_adj[:, start : start + chunk], Z_right)
        blocks.append(kron_apply(W, Z_left, theta @ right))
    if not blocks:
        return np.zeros((W.shape[0] * Z_left.shape[0], 0), dtype=complex)
    return np.hstack(blocks)


def transport_residuals(
    X: JUnitary,
    T: RowContraction,
    N: int,
    margin: int,
    basis: Optional[np.ndarray] = None,
    top_basis: Optional[np.ndarray] = None,
) -> TransportResiduals:
    """
    Measure the transport law for T' = Phi_X^{-1}(T) at r = 1.

    Args:
        X: J-unitary
        T: strict row contraction
        N: truncation level
        margin: levels above N - margin are discarded before comparing
        basis: optional orthonormal basis Q of an invariant subspace of F_N;
            the law is then compared after compressing both sides to it
        top_basis: the columns of Q living on levels <= N - margin,
            restricted to those rows (required with basis)

    Returns:
        TransportResiduals with both residuals and the predicted scale
        ||P_top U_X P_{>N}||, which bounds both on the full space
    """
    X = JUnitary.of(X)
    n = T.n
    top = N - margin
    size = fock_dim(n, top)
    T_prime = apply_inverse_automorphism(X, T)
    pair = defect_intertwiners(X, T)
    d, d_star = T.defect_dims
    d_prime, d_star_prime = T_prime.defect_dims

    U_top = implementing_unitary(X, n, N, rows_level=top)
    K = poisson_kernel(T, 1.0, N)
    K_prime = poisson_kernel(T_prime, 1.0, N)[: size * d_star_prime]
    theta = char_function(T, 1.0, N).sparse()
    theta_prime = char_function(T_prime, 1.0, N).sparse()[
        : size * d_star_prime, : size * d_prime
    ]

    if basis is None:
        W = U_top
        theta_prime_top = theta_prime.toarray()
    else:
        if top_basis is None:
            raise ValidationError(
                "A compressed transport check needs the top block of the basis",
                field="top_basis",
            )
        Q = sp.csr_matrix(basis)
        Q_top = sp.csr_matrix(top_basis)
        W = np.asarray(top_basis).conj().T @ (U_top @ np.asarray(basis))
        K = kron_apply(np.asarray(basis).conj().T, np.eye(d_star), K)
        K_prime = kron_apply(np.asarray(top_basis).conj().T, np.eye(d_star_prime), K_prime)
        theta = (
            sp.kron(Q.conj().T, sp.identity(d_star), format="csr")
            @ theta
            @ sp.kron(Q, sp.identity(d), format="csr")
        )
        theta_prime_top = (
            sp.kron(Q_top.conj().T, sp.identity(d_star_prime), format="csr")
            @ theta_prime
            @ sp.kron(Q_top, sp.identity(d_prime), format="csr")
        ).toarray()

    Z_star_adj = pair.Z_star.conj().T
    res_k = op_norm(K_prime - kron_apply(W, Z_star_adj, K))
    conjugated = conjugate_top(theta, W, Z_star_adj, pair.Z)
    res_theta = op_norm(theta_prime_top - conjugated)

    predicted = truncation_coupling(U_top)
    logger.debug(
        f"Transport residuals at N={N}, margin={margin}: "
        f"theta={res_theta:.3e}, K={res_k:.3e}, predicted={predicted:.3e}"
    )
    return TransportResiduals(
        res_theta=res_theta,
        res_k=res_k,
        predicted_scale=predicted,
        N=N,
        margin=margin,
        intertwiners=pair,
    )


def transport_margin(
    X: JUnitary, n: int, N: int, margin: int, tol: Optional[float] = None
) -> int:
    """
    Smallest margin >= `margin` whose discarded block ||P_top U_X P_{>N}|| is <= tol.

    The tolerance defaults to the theorem tolerance. When no row level
    qualifies the margin is N, leaving only the vacuum level.
    """
    X = JUnitary.of(X)
    if not 0 <= margin <= N:
        raise ValidationError(
            f"Margin {margin} outside [0, {N}]", field="margin", value=margin
        )
    tol = get_settings().theorem_tol if tol is None else tol
    profile = coupling_profile(X, n, N, N - margin)
    admissible = np.nonzero(profile <= tol)[0]
    top = int(admissible[-1]) if admissible.size else 0
    if not admissible.size:
        logger.warning(
            f"No row level of U_X at N={N} is decoupled below {tol:.1e}; "
            f"vacuum coupling is {profile[0]:.3e}"
        )
    return N - top


def theorem51_residuals(
    X: JUnitary, T: RowContraction, N: int, margin: int
) -> TransportResiduals:
    """
    Residuals of Theta_{T'} = (U (x) Z_*^*) Theta_T (U^* (x) Z) and
    K_{T'} = (U (x) Z_*^*) K_T on levels <= N - margin, with T' = Phi_X^{-1}(T).
    """
    if not T.strict:
        raise ContractionError(
            "The transport law is checked for strict row contractions only",
            norm=T.row_norm,
            tol=T.tol,
        )
    return transport_residuals(X, T, N, margin)


def associativity_residual(X: JUnitary, T: RowContraction, r: float, N: int) -> float:
    """
    ||(L_T o L_X) o L_r - L_T o (L_X o L_r)|| on the truncated space.

    Dense; meant for small truncation levels.
    """
    Y = unitary_form(X)
    L_T = fock_structured_system(T, N)
    L_X = system_on_fock(Y, T.n, N, T.m)
    L_r = shift_system(T.n, T.m, N, r)
    left = redheffer_product(redheffer_product(L_T, L_X), L_r)
    right = redheffer_product(L_T, redheffer_product(L_X, L_r))
    return op_norm(left.matrix() - right.matrix())


def first_row_residuals(
    X: JUnitary, n: int, m: int, N: int, margin: int
) -> Tuple[float, float]:
    """
    Compare the first row of L_X o L_1 with ((U_X iota) (x) I, (U_X R U_X^*) (x) I).

    The first entry agrees exactly; the second on levels <= N - margin up to
    the tail of U_X^*. Only r = 1 has such an identity.

    Returns:
        (residual of the first entry, residual of the second entry)
    """
    X = JUnitary.of(X)
    top = N - margin
    size = fock_dim(n, top)
    Y = unitary_form(X)
    product = redheffer_product(system_on_fock(Y, n, N, m), shift_system(n, m, N, 1.0))

    U = implementing_unitary(X, n, N)
    eye_m = np.eye(m, dtype=complex)
    vacuum = np.kron(U[:, 0:1], eye_m)
    first = op_norm(product.A - vacuum)

    U_top = U[:size, :]
    expected = np.zeros((size * m, size * n * m), dtype=complex)
    for i, R in enumerate(creation_matrices("right", n, N, sparse=True)):
        conjugated = U_top @ (R @ U_top.conj().T)
        slot = np.zeros((1, n))
        slot[0, i] = 1.0
        expected += np.kron(conjugated, np.kron(slot, eye_m))
    second = op_norm(product.B[: size * m, : size * n * m] - expected)
    return first, second


def shifted_realization_residuals(
    X: JUnitary, T: RowContraction, N: int, margin: int
) -> Tuple[float, float]:
    """
    First row of L_T o (L_X o L_1) against ((U (x) I) K_T, (U (x) I) Theta_T (U^* (x) I)).

    Compared on levels <= N - margin; dense, for small truncation levels.
    """
    X = JUnitary.of(X)
    n, m = T.n, T.m
    top = N - margin
    size = fock_dim(n, top)
    d, d_star = T.defect_dims
    Y = unitary_form(X)
    inner = redheffer_product(system_on_fock(Y, n, N, m), shift_system(n, m, N, 1.0))
    outer = redheffer_product(fock_structured_system(T, N), inner)

    U_top = implementing_unitary(X, n, N, rows_level=top)
    K = kron_apply(U_top, np.eye(d_star), poisson_kernel(T, 1.0, N))
    theta = conjugate_top(
        char_function(T, 1.0, N).sparse(), U_top, np.eye(d_star), np.eye(d)
    )
    res_k = op_norm(outer.A[: size * d_star] - K)
    res_theta = op_norm(outer.B[: size * d_star, : size * d] - theta)
    return res_theta, res_k
