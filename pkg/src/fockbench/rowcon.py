"""
Row contractions, their Poisson kernels and characteristic functions.

For a row contraction T = [T_1 ... T_n] on C^m:

    K_{T,r} h   = sum_w r^{|w|} e_w (x) D_{T*} T_w^* h
    Theta_T(rR) = -I (x) T + (I (x) D_{T*}) (I - sum_i r R_i (x) T_i^*)^{-1}
                  [r R_1 (x) I, ..., r R_n (x) I] (I (x) D_T)

Both are kept in the orthonormal defect bases of :mod:`fockbench.linop`.
Theta is multianalytic, so it is determined by its column at e_empty; the
default path assembles it from those coefficient blocks as a CSR matrix. The
resolvent paths and the Redheffer realization L_T o L_r are independent
cross-checks meant for small truncations.
"""

import logging
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict

from .config import get_settings
from .exceptions import ContractionError, ValidationError
from .fock import TruncatedFock, creation_matrices, fock_dim, nilpotent_solve
from .linop import DefectData, build_structured_unitary, defect, op_norm, polynomial_eval
from .redheffer import BlockSystem2x2, redheffer_product
from .words import Polynomial, Word, level_offset, word_at

logger = logging.getLogger(__name__)

KERNEL_METHODS = ("words", "resolvent")
CHAR_METHODS = ("coefficients", "resolvent")


class RowContraction(BaseModel):
    """
    An n-tuple of m x m matrices with sum_i T_i T_i^* <= I.

    The defect data are those of the row T: C^{nm} -> C^m (D_T, on H^n with
    the slot index major) and of its adjoint (D_{T*}, on H).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrices: np.ndarray
    row_norm: float
    tol: float
    defect_T: DefectData
    defect_T_star: DefectData

    @classmethod
    def from_matrices(
        cls, matrices: Sequence[object], tol: Optional[float] = None
    ) -> "RowContraction":
        """
        Certify a tuple of matrices as a row contraction.

        Raises:
            ValidationError: If the matrices are not square of one size
            ContractionError: If the row norm exceeds 1 + tol
        """
        tol = get_settings().contraction_tol if tol is None else tol
        stack = np.array([np.atleast_2d(np.asarray(T, dtype=complex)) for T in matrices])
        if stack.ndim != 3 or stack.shape[0] < 1 or stack.shape[1] != stack.shape[2]:
            raise ValidationError(
                "A row contraction needs n >= 1 square matrices of one size",
                field="matrices",
                value=list(stack.shape),
            )
        row = np.hstack(list(stack))
        norm = op_norm(row)
        if norm > 1 + tol:
            raise ContractionError(
                f"Row norm {norm:.6g} exceeds 1 + {tol:g}", norm=norm, tol=tol
            )
        stack.setflags(write=False)
        return cls(
            matrices=stack,
            row_norm=norm,
            tol=tol,
            defect_T=defect(row, tol=tol),
            defect_T_star=defect(row.conj().T, tol=tol),
        )

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def m(self) -> int:
        return self.matrices.shape[1]

    @property
    def row(self) -> np.ndarray:
        """The m x nm block [T_1 ... T_n]."""
        return np.hstack(list(self.matrices))

    @property
    def strict(self) -> bool:
        return self.row_norm < 1 - self.tol

    @property
    def defect_dims(self) -> tuple:
        """(dim D_T, dim D_{T*})."""
        return self.defect_T.rank, self.defect_T_star.rank

    def word_products(self, N: int) -> np.ndarray:
        """T_w for every word of length at most N, stacked in basis order."""
        level = np.eye(self.m, dtype=complex)[None, :, :]
        blocks = [level]
        for _ in range(N):
            # T_{iw} = T_i T_w
            level = np.einsum("iab,wbc->iwac", self.matrices, level).reshape(
                -1, self.m, self.m
            )
            blocks.append(level)
        return np.concatenate(blocks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "matrices": [
                {"re": T.real.tolist(), "im": T.imag.tolist()} for T in self.matrices
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RowContraction":
        try:
            matrices = [
                np.asarray(entry["re"], dtype=float) + 1j * np.asarray(entry["im"], dtype=float)
                for entry in data["matrices"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed row contraction: {e}", field="matrices")
        T = cls.from_matrices(matrices)
        if T.n != data.get("n", T.n) or T.m != data.get("m", T.m):
            raise ValidationError(
                "Declared n, m disagree with the matrices",
                field="n,m",
                value=(data.get("n"), data.get("m")),
            )
        return T


class MultianalyticMatrix(BaseModel):
    """An operator F (x) E_in -> F (x) E_out on the truncated Fock space."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: Union[sp.csr_matrix, np.ndarray]
    n: int
    N: int
    d_in: int
    d_out: int

    @property
    def fock(self) -> TruncatedFock:
        return TruncatedFock(n=self.n, N=self.N)

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix)

    def vacuum_column(self) -> np.ndarray:
        """M(e_empty (x) .) as a (dim * d_out) x d_in block."""
        column = self.matrix[:, : self.d_in]
        return column.toarray() if sp.issparse(column) else np.asarray(column)

    def top_block(self, max_level: int) -> Union[sp.csr_matrix, np.ndarray]:
        """Compression to levels <= max_level on both sides."""
        size = fock_dim(self.n, max_level)
        return self.matrix[: size * self.d_out, : size * self.d_in]


class CncVerdict(BaseModel):
    """Outcome of the depth-capped completely non-coisometric test."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    cnc: bool
    depth: int
    short_circuit: bool = False
    witness: Optional[np.ndarray] = None


def _check_r(r: float, T: RowContraction) -> None:
    if not 0 < r <= 1:
        raise ValidationError("Need 0 < r <= 1", field="r", value=r)
    if r == 1 and not T.strict:
        raise ContractionError(
            "r = 1 requires a strict row contraction", norm=T.row_norm, tol=T.tol
        )


def functional_calculus(f: Polynomial, T: RowContraction, r: float = 1.0) -> np.ndarray:
    """sum_w f_w r^{|w|} T_w with T_empty = I."""
    if not f:
        return np.zeros((T.m, T.m), dtype=complex)
    scaled = {w: c * r ** len(w) for w, c in f.items()}
    return np.asarray(polynomial_eval(scaled, list(T.matrices)))


def is_cnc(T: RowContraction, depth: int, rank_tol: Optional[float] = None) -> CncVerdict:
    """
    Depth-capped c.n.c. test.

    Q_k = sum_{|w|=k} T_w T_w^* is iterated by Q_{k+1} = sum_i T_i Q_k T_i^*;
    a unit vector in the kernel of every I - Q_k, k <= depth, witnesses that T
    is not completely non-coisometric.
    """
    if depth < 1:
        raise ValidationError("Depth must be at least 1", field="depth", value=depth)
    if T.strict:
        return CncVerdict(cnc=True, depth=depth, short_circuit=True)
    rank_tol = get_settings().rank_tol if rank_tol is None else rank_tol
    eye = np.eye(T.m, dtype=complex)
    Q = eye
    constraints = []
    for _ in range(depth):
        Q = sum(Ti @ Q @ Ti.conj().T for Ti in T.matrices)
        constraints.append(eye - Q)
    # absolute cutoff: I - Q_k vanishes identically for coisometries
    _, singular, vh = np.linalg.svd(np.vstack(constraints))
    rank = int(np.sum(singular > np.sqrt(rank_tol)))
    kernel = vh[rank:].conj().T
    if kernel.shape[1] == 0:
        return CncVerdict(cnc=True, depth=depth)
    witness = kernel[:, 0]
    logger.debug(f"Found coisometric witness at depth {depth}: {witness}")
    return CncVerdict(cnc=False, depth=depth, witness=witness)


def _kernel_rows(T: RowContraction) -> np.ndarray:
    """V^* D_{T*}: H -> D_{T*} coordinates."""
    return T.defect_T_star.coordinates()


def poisson_kernel(
    T: RowContraction, r: float, N: int, method: str = "words"
) -> np.ndarray:
    """
    The Poisson kernel K_{T,r}: H -> F_N (x) D_{T*}.

    Args:
        T: row contraction
        r: radius in (0, 1]; r = 1 needs a strict T
        N: truncation level
        method: "words" (sum over words) or "resolvent"

    Returns:
        (fock_dim * dim D_{T*}) x m matrix
    """
    _check_r(r, T)
    if method not in KERNEL_METHODS:
        raise ValidationError(
            f"Unknown kernel method '{method}'", field="method", value=method
        )
    coords = _kernel_rows(T)
    d_star = coords.shape[0]
    dim = fock_dim(T.n, N)

    if method == "words":
        products = T.word_products(N)
        lengths = TruncatedFock(n=T.n, N=N).levels()
        blocks = np.einsum("ab,wcb->wac", coords, products.conj())
        blocks = blocks * (r ** lengths)[:, None, None]
        return blocks.reshape(dim * d_star, T.m)

    G = _shift_pencil(T, r, N)
    rhs = np.zeros((dim * T.m, T.m), dtype=complex)
    rhs[: T.m, :] = np.eye(T.m)
    solved = nilpotent_solve(1.0, G, rhs, N).reshape(dim, T.m, T.m)
    return np.einsum("ab,wbc->wac", coords, solved).reshape(dim * d_star, T.m)


def _shift_pencil(T: RowContraction, r: float, N: int) -> sp.csr_matrix:
    """sum_i r R_i (x) T_i^* on F_N (x) H."""
    rights = creation_matrices("right", T.n, N, sparse=True)
    total = None
    for R, Ti in zip(rights, T.matrices):
        term = sp.kron(R, sp.csr_matrix(Ti.conj().T), format="csr") * r
        total = term if total is None else total + term
    return total


def _right_row(n: int, m: int, N: int, r: float) -> sp.csr_matrix:
    """[r R_1 (x) I, ..., r R_n (x) I]: F_N (x) H^n -> F_N (x) H."""
    rights = creation_matrices("right", n, N, sparse=True)
    total = None
    for i, R in enumerate(rights):
        slot = sp.kron(
            sp.csr_matrix(([1.0], ([0], [i])), shape=(1, n)), sp.identity(m), format="csr"
        )
        term = sp.kron(R, slot, format="csr") * r
        total = term if total is None else total + term
    return total


def char_coefficients(T: RowContraction, r: float, N: int) -> np.ndarray:
    """
    The blocks c_s of Theta_T(rR)(e_empty (x) .) for |s| <= N, in basis order.

    c_empty = -V^* T U and, for s = j u, c_s = r^{|s|} V^* D_{T*} T_u^* E_j D_T U,
    where E_j picks slot j of H^n and U, V are the defect bases.
    """
    _check_r(r, T)
    V_D = _kernel_rows(T)
    D_U = T.defect_T.embedding()
    U = T.defect_T.basis
    d_star, d = V_D.shape[0], U.shape[1]
    m, n = T.m, T.n

    blocks = [(-T.defect_T_star.basis.conj().T @ T.row @ U)[None, :, :]]
    products = T.word_products(max(N - 1, 0))
    slots = [D_U[j * m : (j + 1) * m, :] for j in range(n)]
    for k in range(N):
        level = products[level_offset(n, k) : level_offset(n, k + 1)]
        inner = np.einsum("ab,ucb->uac", V_D, level.conj())
        # words j.u at level k + 1 are ordered with j major
        per_slot = [np.einsum("uac,cd->uad", inner, slot) for slot in slots]
        blocks.append(r ** (k + 1) * np.concatenate(per_slot).reshape(-1, d_star, d))
    return np.concatenate(blocks)


def multianalytic_from_coefficients(
    coefficients: np.ndarray, n: int, N: int
) -> MultianalyticMatrix:
    """
    Rebuild a multianalytic matrix from its e_empty column blocks.

    M(e_u (x) k) = sum_s e_{us} (x) c_s k, truncated to |us| <= N.
    """
    coefficients = np.asarray(coefficients, dtype=complex)
    dim = fock_dim(n, N)
    if coefficients.ndim != 3 or coefficients.shape[0] != dim:
        raise ValidationError(
            f"Expected {dim} coefficient blocks", field="coefficients",
            value=list(coefficients.shape),
        )
    _, d_out, d_in = coefficients.shape
    rows, cols, values = [], [], []
    a_index = np.arange(d_out)[None, None, :, None]
    b_index = np.arange(d_in)[None, None, None, :]
    for k_u in range(N + 1):
        pos_u = np.arange(n**k_u)[:, None]
        for k_s in range(N - k_u + 1):
            pos_s = np.arange(n**k_s)[None, :]
            block_rows = level_offset(n, k_u + k_s) + pos_u * n**k_s + pos_s
            block_cols = np.broadcast_to(level_offset(n, k_u) + pos_u, block_rows.shape)
            start = level_offset(n, k_s)
            c = coefficients[start : start + n**k_s]
            full_rows = block_rows[:, :, None, None] * d_out + a_index
            full_cols = block_cols[:, :, None, None] * d_in + b_index
            full_values = np.broadcast_to(c[None, :, :, :], full_rows.shape[:2] + c.shape[1:])
            rows.append(np.broadcast_to(full_rows, full_values.shape).ravel())
            cols.append(np.broadcast_to(full_cols, full_values.shape).ravel())
            values.append(full_values.ravel())
    matrix = sp.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim * d_out, dim * d_in),
    )
    matrix.eliminate_zeros()
    return MultianalyticMatrix(matrix=matrix, n=n, N=N, d_in=d_in, d_out=d_out)


def multianalytic_from_column(
    column: np.ndarray, n: int, N: int, d_out: int
) -> MultianalyticMatrix:
    """Same as multianalytic_from_coefficients, from the stacked e_empty column."""
    column = np.asarray(column, dtype=complex)
    dim = fock_dim(n, N)
    return multianalytic_from_coefficients(
        column.reshape(dim, d_out, column.shape[1]), n, N
    )


def char_function(
    T: RowContraction, r: float, N: int, method: str = "coefficients"
) -> MultianalyticMatrix:
    """
    The characteristic function Theta_T(rR): F_N (x) D_T -> F_N (x) D_{T*}.

    Args:
        T: row contraction
        r: radius in (0, 1]; r = 1 needs a strict T
        N: truncation level
        method: "coefficients" (CSR from the e_empty column) or "resolvent"
            (the dense closed formula; only for small truncations)
    """
    _check_r(r, T)
    if method not in CHAR_METHODS:
        raise ValidationError(
            f"Unknown characteristic function method '{method}'",
            field="method",
            value=method,
        )
    if method == "coefficients":
        return multianalytic_from_coefficients(char_coefficients(T, r, N), T.n, N)

    dim = fock_dim(T.n, N)
    V_D = _kernel_rows(T)
    U = T.defect_T.basis
    d_star, d = V_D.shape[0], U.shape[1]
    eye = sp.identity(dim, dtype=complex, format="csr")

    inputs = _right_row(T.n, T.m, N, r) @ sp.kron(eye, sp.csr_matrix(T.defect_T.embedding()))
    solved = nilpotent_solve(1.0, _shift_pencil(T, r, N), inputs.toarray(), N)
    solved = solved.reshape(dim, T.m, dim * d)
    theta = np.einsum("ab,wbc->wac", V_D, solved).reshape(dim * d_star, dim * d)
    theta -= np.kron(np.eye(dim), T.defect_T_star.basis.conj().T @ T.row @ U)
    return MultianalyticMatrix(matrix=theta, n=T.n, N=N, d_in=d, d_out=d_star)


def structured_system(T: RowContraction) -> BlockSystem2x2:
    """
    [[D_{T*}, -T], [T^*, D_T]]: H (+) D_T -> D_{T*} (+) H^n, in defect bases.

    This is the unitary block of T with both defect intertwiners equal to I.
    """
    d, d_star = T.defect_dims
    return build_structured_unitary(
        T.row, np.eye(d_star, dtype=complex), np.eye(d, dtype=complex)
    )


def _on_fock(system: BlockSystem2x2, dim: int) -> BlockSystem2x2:
    eye = np.eye(dim, dtype=complex)
    x, u, y, z = system.dims
    return BlockSystem2x2.from_blocks(
        np.kron(eye, system.A),
        np.kron(eye, system.B),
        np.kron(eye, system.C),
        np.kron(eye, system.D),
        dims=(dim * x, dim * u, dim * y, dim * z),
    )


def fock_structured_system(T: RowContraction, N: int) -> BlockSystem2x2:
    """L_T = I_F (x) structured_system(T)."""
    return _on_fock(structured_system(T), fock_dim(T.n, N))


def shift_system(n: int, m: int, N: int, r: float) -> BlockSystem2x2:
    """
    L_r = [[iota (x) I_H, r R (x) I_H], [0, 0]]: H (+) (F (x) H^n) -> (F (x) H) (+) {0}.
    """
    if not 0 < r <= 1:
        raise ValidationError("Need 0 < r <= 1", field="r", value=r)
    dim = fock_dim(n, N)
    A = np.zeros((dim * m, m), dtype=complex)
    A[:m, :] = np.eye(m)
    B = _right_row(n, m, N, r).toarray()
    return BlockSystem2x2.from_blocks(
        A,
        B,
        np.zeros((0, m)),
        np.zeros((0, dim * n * m)),
        dims=(m, dim * n * m, dim * m, 0),
    )


class Realization(BaseModel):
    """The systems L_T, L_r and their Redheffer product."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    L_T: BlockSystem2x2
    L_r: BlockSystem2x2
    product: BlockSystem2x2

    @property
    def kernel(self) -> np.ndarray:
        return self.product.A

    @property
    def theta(self) -> np.ndarray:
        return self.product.B


def redheffer_realization(T: RowContraction, r: float, N: int) -> Realization:
    """
    Compute L_T o L_r, whose first row is (K_{T,r}, Theta_T(rR)).

    Dense; meant for small truncation levels.
    """
    _check_r(r, T)
    L_T = fock_structured_system(T, N)
    L_r = shift_system(T.n, T.m, N, r)
    return Realization(L_T=L_T, L_r=L_r, product=redheffer_product(L_T, L_r))


def fourier_coefficients(M: MultianalyticMatrix) -> Dict[Word, np.ndarray]:
    """
    The Fourier coefficients m_w, read from the e_empty column.

    The block at e_w of M(e_empty (x) .) is m_{reverse(w)}.
    """
    column = M.vacuum_column().reshape(-1, M.d_out, M.d_in)
    coefficients: Dict[Word, np.ndarray] = {}
    for index, block in enumerate(column):
        coefficients[word_at(index, M.n, M.N).reverse()] = block
    return coefficients


def coefficients_to_dict(coefficients: Dict[Word, np.ndarray]) -> Dict[str, Any]:
    """JSON form keyed by word strings."""
    return {
        str(w): {"re": block.real.tolist(), "im": block.imag.tolist()}
        for w, block in coefficients.items()
    }


def is_multianalytic(M: MultianalyticMatrix) -> float:
    """max_i ||P_{N-1} [(L_i (x) I) M - M (L_i (x) I)] P_{N-1}||."""
    size = fock_dim(M.n, max(M.N - 1, 0))
    matrix = M.sparse()
    residual = 0.0
    for L in creation_matrices("left", M.n, M.N, sparse=True):
        left = sp.kron(L, sp.identity(M.d_out), format="csr") @ matrix
        right = matrix @ sp.kron(L, sp.identity(M.d_in), format="csr")
        difference = (left - right)[: size * M.d_out, : size * M.d_in]
        residual = max(residual, op_norm(difference))
    return residual


def level_structure_residual(M: MultianalyticMatrix) -> float:
    """Largest entry mapping a level to a strictly lower level."""
    matrix = M.sparse().tocoo()
    levels = TruncatedFock(n=M.n, N=M.N).levels()
    row_levels = levels[matrix.row // max(M.d_out, 1)]
    col_levels = levels[matrix.col // max(M.d_in, 1)]
    lowering = np.abs(matrix.data[row_levels < col_levels])
    return float(lowering.max()) if lowering.size else 0.0


def defect_identity_residual(T: RowContraction, N: int, margin: int) -> tuple:
    """
    ||P (K K^* + Theta Theta^* - I) P|| on levels <= N - margin, r = 1.

    Returns (residual, predicted scale rho^{2(N - margin + 1)}).
    """
    top = N - margin
    size = fock_dim(T.n, top)
    d, d_star = T.defect_dims
    K = poisson_kernel(T, 1.0, N)[: size * d_star]
    theta = char_function(T, 1.0, N).matrix[: size * d_star, :]
    gram = K @ K.conj().T + (theta @ theta.conj().T).toarray()
    residual = op_norm(gram - np.eye(size * d_star))
    return residual, T.row_norm ** (2 * (top + 1))


def kernel_isometry_residual(T: RowContraction, N: int) -> tuple:
    """||K^*K - I|| = ||sum_{|w|=N+1} T_w T_w^*||, with scale rho^{2(N+1)}."""
    K = poisson_kernel(T, 1.0, N)
    residual = op_norm(K.conj().T @ K - np.eye(T.m))
    return residual, T.row_norm ** (2 * (N + 1))
