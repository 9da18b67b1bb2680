"""
Block-operator linear algebra.

Contractivity certificates, defect operators with explicit orthonormal bases
of their ranges, and the structure of unitary 2x2 blocks whose lower-left
entry is a prescribed contraction.
"""

import logging
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict

from .config import get_settings
from .exceptions import ContractionError, StructureError, ValidationError
from .redheffer import BlockSystem2x2
from .words import Word

logger = logging.getLogger(__name__)

Matrix = Union[np.ndarray, sp.spmatrix]


def as_dense(M: Matrix) -> np.ndarray:
    if sp.issparse(M):
        return M.toarray()
    return np.asarray(M)


def adjoint(M: Matrix) -> Matrix:
    return M.conj().T


def op_norm(M: Matrix) -> float:
    """Largest singular value; zero for empty matrices."""
    dense = as_dense(M)
    if dense.size == 0:
        return 0.0
    if dense.ndim == 1:
        return float(np.linalg.norm(dense))
    return float(np.linalg.norm(dense, 2))


def isometry_residual(M: Matrix) -> float:
    """||M*M - I||."""
    dense = as_dense(M)
    return op_norm(dense.conj().T @ dense - np.eye(dense.shape[1]))


def unitarity_residual(M: Matrix) -> float:
    """max(||M*M - I||, ||MM* - I||)."""
    dense = as_dense(M)
    if dense.shape[0] != dense.shape[1]:
        raise ValidationError(
            "Unitarity needs a square matrix", field="shape", value=dense.shape
        )
    return max(isometry_residual(dense), isometry_residual(dense.conj().T))


def closest_unitary(M: np.ndarray) -> np.ndarray:
    """Polar factor of M (the nearest unitary in every unitarily invariant norm)."""
    if M.size == 0:
        return np.zeros(M.shape, dtype=complex)
    left, _, right = np.linalg.svd(M)
    return left @ right


def psd_sqrt(H: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Square root of a Hermitian positive semidefinite matrix.

    Eigenvalues are clamped at zero before taking roots, so roundoff of order
    1e-16 never produces an indefinite result.

    Returns:
        (sqrt(H), clamped eigenvalues, eigenvectors)
    """
    if H.size == 0:
        empty = np.zeros(H.shape, dtype=complex)
        return empty, np.zeros(0), empty
    hermitian = (H + H.conj().T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    root = (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.conj().T
    return root, eigenvalues, eigenvectors


def row_block(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """The row operator [T_1 ... T_n] as an m x nm matrix."""
    if not matrices:
        raise ValidationError("Row needs at least one entry", field="matrices")
    shapes = {np.shape(T) for T in matrices}
    if len(shapes) != 1:
        raise ValidationError(
            "Row entries must share one shape", field="matrices", value=sorted(shapes)
        )
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValidationError(
            "Row entries must be square", field="matrices", value=shape
        )
    return np.hstack([np.asarray(T, dtype=complex) for T in matrices])


def row_norm(matrices: Sequence[np.ndarray]) -> float:
    return op_norm(row_block(matrices))


def polynomial_eval(poly: Mapping[Word, complex], ops: Sequence[Matrix]) -> Matrix:
    """
    Evaluate sum_w c_w A_w with A_w = A_{i1} ... A_{ik} and A_e = I.

    Works for dense and sparse operator tuples alike.
    """
    if not ops:
        raise ValidationError("No operators to evaluate on", field="ops")
    dim = ops[0].shape[0]
    is_sparse = sp.issparse(ops[0])
    if is_sparse:
        identity = sp.identity(dim, dtype=complex, format="csr")
    else:
        identity = np.eye(dim, dtype=complex)
    total = identity * 0
    for w, coefficient in poly.items():
        if w.n > len(ops) or any(letter > len(ops) for letter in w.letters):
            raise ValidationError(
                f"Word {w} uses letters beyond the {len(ops)} available operators",
                field="poly",
                value=str(w),
            )
        product = identity
        for letter in w.letters:
            product = product @ ops[letter - 1]
        total = total + coefficient * product
    return total


class Contraction(BaseModel):
    """A matrix C: E1 -> E2 certified to have norm at most 1 + tol."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    tol: float
    norm: float

    @classmethod
    def of(cls, C: object, tol: Optional[float] = None) -> "Contraction":
        """
        Certify a matrix as a contraction.

        Raises:
            ContractionError: If the largest singular value exceeds 1 + tol
        """
        if isinstance(C, Contraction):
            return C
        tol = get_settings().contraction_tol if tol is None else tol
        M = np.array(C, dtype=complex)
        if M.ndim == 0:
            M = M.reshape(1, 1)
        if M.ndim != 2:
            raise ValidationError(
                "A contraction must be a matrix", field="matrix", value=M.shape
            )
        norm = op_norm(M)
        if norm > 1 + tol:
            raise ContractionError(
                f"Operator norm {norm:.6g} exceeds 1 + {tol:g}", norm=norm, tol=tol
            )
        M.setflags(write=False)
        return cls(matrix=M, tol=tol, norm=norm)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def adjoint(self) -> "Contraction":
        return Contraction.of(self.matrix.conj().T, self.tol)


class DefectData(BaseModel):
    """
    The defect operator D = (I - C*C)^{1/2} of a contraction and an
    orthonormal basis of its range.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    operator: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    rank_tol: float

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @property
    def full(self) -> bool:
        return self.rank == self.dim

    def coordinates(self) -> np.ndarray:
        """D expressed as a map into defect-basis coordinates (rank x dim)."""
        return self.basis.conj().T @ self.operator

    def embedding(self) -> np.ndarray:
        """D restricted to the defect space, in basis coordinates (dim x rank)."""
        return self.operator @ self.basis


def defect(
    C: object, rank_tol: Optional[float] = None, tol: Optional[float] = None
) -> DefectData:
    """
    Defect operator and defect space of a contraction.

    The defect basis consists of eigenvectors of I - C*C whose eigenvalue
    exceeds rank_tol * max(1, largest eigenvalue). A full-rank defect uses the
    standard basis, so for strict contractions defect coordinates coincide
    with ordinary coordinates.

    Args:
        C: contraction (matrix or Contraction)
        rank_tol: eigenvalue cutoff
        tol: contractivity slack

    Returns:
        DefectData with D, basis and clamped eigenvalues

    Raises:
        ContractionError: If C is not a contraction
    """
    contraction = Contraction.of(C, tol)
    rank_tol = get_settings().rank_tol if rank_tol is None else rank_tol
    M = contraction.matrix
    q = M.shape[1]
    gram = np.eye(q, dtype=complex) - M.conj().T @ M
    root, eigenvalues, eigenvectors = psd_sqrt(gram)

    if q == 0:
        basis = np.zeros((0, 0), dtype=complex)
    else:
        cutoff = rank_tol * max(1.0, float(eigenvalues.max()))
        keep = eigenvalues > cutoff
        if keep.all():
            basis = np.eye(q, dtype=complex)
        else:
            basis = eigenvectors[:, keep]

    logger.debug(f"Defect of {M.shape} contraction has rank {basis.shape[1]}/{q}")
    for array in (root, basis, eigenvalues):
        array.setflags(write=False)
    return DefectData(
        operator=root, basis=basis, eigenvalues=eigenvalues, rank_tol=rank_tol
    )


class StructuredFactors(BaseModel):
    """The data (A, Z, Z_*) of a structured unitary block."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: Contraction
    Z: np.ndarray
    Z_star: np.ndarray
    residual: float


def _as_square(M: object) -> np.ndarray:
    block = np.array(M, dtype=complex)
    if block.size == 0:
        return np.zeros((0, 0), dtype=complex)
    if block.ndim == 0:
        return block.reshape(1, 1)
    return block


def build_structured_unitary(
    A: object,
    Z_star: object,
    Z: object,
    tol: Optional[float] = None,
) -> BlockSystem2x2:
    """
    The unitary block [[Z_* D_{A*}, -Z_* A Z*], [A*, D_A Z*]].

    Defect operators are taken in the orthonormal bases of defect(); Z_* acts
    on the coordinates of the defect space of A* and Z on those of A.

    Args:
        A: contraction E2' -> E1
        Z_star: unitary on the defect coordinates of A*
        Z: unitary on the defect coordinates of A
        tol: unitarity tolerance for Z and Z_*

    Returns:
        BlockSystem2x2 on E1 (+) E2 -> E1' (+) E2'

    Raises:
        StructureError: If Z or Z_* is not unitary of the right size
    """
    tol = get_settings().law_tol if tol is None else tol
    contraction = Contraction.of(A)
    Am = contraction.matrix
    defect_A = defect(contraction)
    defect_A_star = defect(contraction.adjoint())

    Zs = _as_square(Z_star)
    Zm = _as_square(Z)
    for name, unitary, rank in (
        ("Z_star", Zs, defect_A_star.rank),
        ("Z", Zm, defect_A.rank),
    ):
        if unitary.shape != (rank, rank):
            raise StructureError(
                f"{name} must be a {rank}x{rank} unitary on its defect space",
                rank=unitary.shape[0] if unitary.ndim else 0,
                expected_rank=rank,
            )
        if rank and unitarity_residual(unitary) > tol:
            raise StructureError(
                f"{name} is not unitary", residual=unitarity_residual(unitary)
            )

    V = defect_A_star.basis
    U = defect_A.basis
    Z_adj = Zm.conj().T
    p, q = Am.shape
    return BlockSystem2x2.from_blocks(
        Zs @ V.conj().T @ defect_A_star.operator,
        -Zs @ V.conj().T @ Am @ U @ Z_adj,
        Am.conj().T,
        defect_A.operator @ U @ Z_adj,
        dims=(p, defect_A.rank, defect_A_star.rank, q),
    )


def factor_structured_unitary(
    J: BlockSystem2x2,
    tol: Optional[float] = None,
    rank_tol: Optional[float] = None,
) -> StructuredFactors:
    """
    Recover (A, Z, Z_*) from a unitary block whose (1,1) entry has dense range.

    Args:
        J: unitary block system; its (2,1) block is read as A*
        tol: tolerance for unitarity of J and for the reconstruction
        rank_tol: defect rank cutoff

    Returns:
        StructuredFactors with the reconstruction residual

    Raises:
        StructureError: If J is not unitary, or its (1,1) block is rank-deficient
            relative to the defect space of A*
    """
    settings = get_settings()
    tol = settings.law_tol if tol is None else tol
    rank_tol = settings.rank_tol if rank_tol is None else rank_tol

    full = J.matrix()
    if full.shape[0] != full.shape[1] or unitarity_residual(full) > tol:
        raise StructureError(
            "Block system is not unitary",
            residual=unitarity_residual(full) if full.shape[0] == full.shape[1] else None,
        )

    contraction = Contraction.of(J.C.conj().T)
    defect_A = defect(contraction, rank_tol)
    defect_A_star = defect(contraction.adjoint(), rank_tol)

    singular_cutoff = np.sqrt(rank_tol)
    top_left_rank = (
        int(np.linalg.matrix_rank(J.A, tol=singular_cutoff)) if J.A.size else 0
    )
    if J.A.shape[0] != defect_A_star.rank or top_left_rank != defect_A_star.rank:
        raise StructureError(
            "The (1,1) block does not have dense range in the defect space of A*",
            rank=top_left_rank,
            expected_rank=defect_A_star.rank,
        )

    Z_star = J.A @ scipy.linalg.pinv(defect_A_star.coordinates())
    Z_adj = scipy.linalg.pinv(defect_A.embedding()) @ J.D
    Z = Z_adj.conj().T

    rebuilt = build_structured_unitary(contraction, Z_star, Z, tol=max(tol, 1e-8))
    residual = op_norm(rebuilt.matrix() - full)
    if residual > tol:
        raise StructureError(
            "Reconstruction does not reproduce the block", residual=residual
        )
    return StructuredFactors(A=contraction, Z=Z, Z_star=Z_star, residual=residual)


def kron_apply(A: np.ndarray, B: np.ndarray, M: Matrix) -> np.ndarray:
    """
    (A (x) B) M without forming the Kronecker product.

    M has A.shape[1] * B.shape[1] rows, ordered with the A index major.
    """
    dense = as_dense(M)
    columns = dense.shape[1]
    stacked = dense.reshape(A.shape[1], B.shape[1] * columns)
    left = (A @ stacked).reshape(A.shape[0], B.shape[1], columns)
    return np.einsum("ts,asc->atc", B, left).reshape(A.shape[0] * B.shape[0], columns)
