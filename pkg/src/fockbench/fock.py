"""
Truncated full Fock space over C^n.

The basis e_w is indexed by words of length at most N in the graded
lexicographic order of :mod:`fockbench.words`, so level k occupies the
contiguous block [level_offset(k), level_offset(k + 1)). Tensor spaces
F (x) C^m are laid out Fock index major, coefficient index minor.

Creation operators are the compressions P_N L_i P_N and P_N R_i P_N: the top
level is sent to zero. They are built once per (side, i, n, N) as CSR
matrices and handed out as dense copies unless ``sparse=True``.
"""

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, field_validator

from .exceptions import ReportError, ValidationError
from .words import Word, enumerate_words, index_of, level_offset, word_at, word_count

logger = logging.getLogger(__name__)

SIDES = ("left", "right")

Matrix = Union[np.ndarray, sp.spmatrix]


def fock_dim(n: int, N: int) -> int:
    """Dimension of the Fock space truncated at level N."""
    return word_count(n, N)


class TruncatedFock(BaseModel):
    """Dimension bookkeeping for the space of words of length at most N."""

    model_config = ConfigDict(frozen=True)

    n: int
    N: int

    @field_validator("n")
    @classmethod
    def alphabet_must_be_positive(cls, v: int) -> int:
        if v < 1:
            raise ValidationError("Alphabet size must be at least 1", field="n", value=v)
        return v

    @field_validator("N")
    @classmethod
    def level_must_be_nonnegative(cls, v: int) -> int:
        if v < 0:
            raise ValidationError("Truncation level must be >= 0", field="N", value=v)
        return v

    @property
    def dim(self) -> int:
        return fock_dim(self.n, self.N)

    @property
    def level_offsets(self) -> List[int]:
        """Start index of every level, plus the total dimension at the end."""
        return [level_offset(self.n, k) for k in range(self.N + 2)]

    def level_slice(self, k: int) -> slice:
        if not 0 <= k <= self.N:
            raise ValidationError(
                f"Level {k} outside 0..{self.N}", field="level", value=k
            )
        return slice(level_offset(self.n, k), level_offset(self.n, k + 1))

    def block(self, max_level: int) -> slice:
        """Indices of all words with length at most max_level."""
        return slice(0, fock_dim(self.n, min(max_level, self.N)))

    def levels(self) -> np.ndarray:
        """Length of the word at each basis index."""
        return np.concatenate(
            [np.full(self.n**k, k, dtype=int) for k in range(self.N + 1)]
        )

    def words(self) -> List[Word]:
        return enumerate_words(self.n, self.N)

    def index_of(self, w: Word) -> int:
        if w.n != self.n:
            raise ValidationError(
                f"Word over alphabet {w.n} used in Fock space over {self.n}",
                field="word",
                value=str(w),
            )
        return index_of(w, self.N)

    def word_at(self, i: int) -> Word:
        return word_at(i, self.n, self.N)

    def truncate(self, N: int) -> "TruncatedFock":
        return TruncatedFock(n=self.n, N=N)


def _check_generator(side: str, i: int, n: int) -> None:
    if side not in SIDES:
        raise ValidationError(
            f"Unknown side '{side}'", field="side", value=side, expected_type="left|right"
        )
    if not 1 <= i <= n:
        raise ValidationError(
            f"Generator index {i} outside 1..{n}", field="i", value=i
        )


@lru_cache(maxsize=64)
def _creation_operator(side: str, i: int, n: int, N: int) -> sp.csr_matrix:
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    for k in range(N):
        positions = np.arange(n**k)
        cols.append(level_offset(n, k) + positions)
        if side == "left":
            # i.w sits at (i - 1) * n^k + pos(w) inside level k + 1
            rows.append(level_offset(n, k + 1) + (i - 1) * n**k + positions)
        else:
            rows.append(level_offset(n, k + 1) + positions * n + (i - 1))
    dim = fock_dim(n, N)
    row_index = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
    col_index = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
    operator = sp.csr_matrix(
        (np.ones(row_index.size, dtype=complex), (row_index, col_index)),
        shape=(dim, dim),
    )
    logger.debug(f"Built {side} creation operator {i} for n={n}, N={N} (dim={dim})")
    return operator


def creation_matrix(
    side: str, i: int, n: int, N: int, sparse: bool = False
) -> Matrix:
    """
    Matrix of P_N L_i P_N (side="left") or P_N R_i P_N (side="right").

    Args:
        side: "left" or "right"
        i: generator index in 1..n
        n: alphabet size
        N: truncation level
        sparse: return a CSR matrix instead of a dense array

    Returns:
        The (fock_dim x fock_dim) creation matrix

    Raises:
        ValidationError: If the side or generator index is invalid
    """
    _check_generator(side, i, n)
    fock_dim(n, N)
    operator = _creation_operator(side, i, n, N)
    return operator.copy() if sparse else operator.toarray()


def creation_matrices(side: str, n: int, N: int, sparse: bool = False) -> List[Matrix]:
    return [creation_matrix(side, i, n, N, sparse=sparse) for i in range(1, n + 1)]


@lru_cache(maxsize=32)
def _reversal(n: int, N: int) -> np.ndarray:
    permutation = []
    for k in range(N + 1):
        remaining = np.arange(n**k)
        reversed_position = np.zeros(n**k, dtype=int)
        for _ in range(k):
            reversed_position = reversed_position * n + remaining % n
            remaining = remaining // n
        permutation.append(level_offset(n, k) + reversed_position)
    result = np.concatenate(permutation)
    result.setflags(write=False)
    return result


def reversal_permutation(n: int, N: int) -> np.ndarray:
    """perm[index_of(w)] = index_of(reverse(w))."""
    fock_dim(n, N)
    return _reversal(n, N).copy()


def flip_matrix(n: int, N: int, sparse: bool = False) -> Matrix:
    """The permutation e_w -> e_{reverse(w)}; level preserving and involutive."""
    permutation = _reversal(n, N)
    dim = permutation.size
    flip = sp.csr_matrix(
        (np.ones(dim, dtype=complex), (permutation, np.arange(dim))), shape=(dim, dim)
    )
    return flip if sparse else flip.toarray()


def vacuum_embedding(n: int, N: int) -> np.ndarray:
    """The inclusion C -> F, 1 -> e_empty, as a dim x 1 column."""
    iota = np.zeros((fock_dim(n, N), 1), dtype=complex)
    iota[0, 0] = 1.0
    return iota


def lambda_powers(lam: Sequence[complex], N: int) -> np.ndarray:
    """The products lambda_w = lambda_{i1} ... lambda_{ik} for every word, in basis order."""
    lam = np.asarray(lam, dtype=complex).ravel()
    level = np.ones(1, dtype=complex)
    blocks = [level]
    for _ in range(N):
        # lambda_{iw} = lambda_i lambda_w, and iw has offset (i - 1) n^k + pos(w)
        level = np.kron(lam, level)
        blocks.append(level)
    return np.concatenate(blocks)


def nu_lambda(lam: Sequence[complex], n: int, N: int) -> np.ndarray:
    """
    The truncated eigenvector (1 - |lam|^2)^{1/2} sum_w conj(lam_w) e_w.

    Raises:
        ValidationError: If lam has the wrong length or |lam| >= 1
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    if lam.size != n:
        raise ValidationError(
            f"Point has {lam.size} coordinates, expected {n}", field="lambda", value=lam.size
        )
    radius = float(np.linalg.norm(lam))
    if radius >= 1:
        raise ValidationError(
            f"Point must lie in the open unit ball (|lambda| = {radius:.6g})",
            field="lambda",
            value=radius,
        )
    return np.sqrt(1 - radius**2) * np.conj(lambda_powers(lam, N))


def pencil(coefficients: Sequence[complex], operators: Sequence[Matrix]) -> Matrix:
    """The combination sum_i zeta_i A_i (written L[zeta] for creation operators)."""
    coefficients = np.asarray(coefficients, dtype=complex).ravel()
    if coefficients.size != len(operators):
        raise ValidationError(
            "Pencil needs one coefficient per operator",
            field="coefficients",
            value=(coefficients.size, len(operators)),
        )
    total = operators[0] * coefficients[0]
    for zeta, operator in zip(coefficients[1:], operators[1:]):
        total = total + operator * zeta
    return total


def row_operator(operators: Sequence[Matrix]) -> sp.csr_matrix:
    """
    The row [A_1 ... A_n]: F (x) C^n -> F, with the Fock index major.

    Equals sum_i kron(A_i, e_i^T).
    """
    n = len(operators)
    total = None
    for i, operator in enumerate(operators):
        selector = sp.csr_matrix(([1.0], ([0], [i])), shape=(1, n))
        term = sp.kron(sp.csr_matrix(operator), selector, format="csr")
        total = term if total is None else total + term
    return total


def nilpotent_solve(
    x: complex, A: Matrix, rhs: np.ndarray, N: int
) -> np.ndarray:
    """
    Solve (x I - A) y = rhs for a strictly level-raising A.

    A^{N+1} = 0 on the truncated space, so N + 1 Neumann steps are exact.
    """
    if x == 0:
        raise ValidationError("Scalar part of the pencil must be nonzero", field="x", value=x)
    y = rhs / x
    for _ in range(N):
        y = (rhs + A @ y) / x
    return y


def export_matrix(
    M: Matrix,
    path: Union[str, Path],
    n: int,
    N: int,
    coeff_dim: int = 1,
    role: str = "matrix",
    extra: Optional[Dict[str, object]] = None,
) -> Path:
    """
    Write a matrix as column-major little-endian complex128 plus a JSON descriptor.

    Args:
        M: dense or sparse matrix
        path: target path; ".bin" and ".json" files are written next to it
        n, N: ambient Fock space
        coeff_dim: coefficient dimension tensored with the Fock space
        role: free-form label (e.g. "U_X", "Theta_T")
        extra: additional descriptor fields

    Returns:
        Path of the descriptor file

    Raises:
        ReportError: If the files cannot be written
    """
    dense = M.toarray() if sp.issparse(M) else np.asarray(M)
    dense = np.atleast_2d(dense)
    target = Path(path)
    data_path = target.with_suffix(".bin")
    descriptor_path = target.with_suffix(".json")
    descriptor = {
        "n": n,
        "N": N,
        "coeff_dim": coeff_dim,
        "role": role,
        "shape": list(dense.shape),
        "dtype": "<c16",
        "order": "F",
        "data": data_path.name,
    }
    if extra:
        descriptor.update(extra)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        dense.astype("<c16").ravel(order="F").tofile(data_path)
        descriptor_path.write_text(json.dumps(descriptor, indent=2, sort_keys=True))
    except OSError as e:
        raise ReportError(
            f"Failed to export {role}", path=str(target), reason=str(e)
        )
    logger.debug(f"Exported {role} {dense.shape} to {data_path}")
    return descriptor_path


def load_matrix(descriptor_path: Union[str, Path]) -> np.ndarray:
    """Read back a matrix written by export_matrix."""
    descriptor_path = Path(descriptor_path)
    try:
        descriptor = json.loads(descriptor_path.read_text())
        raw = np.fromfile(descriptor_path.parent / descriptor["data"], dtype="<c16")
    except (OSError, KeyError, ValueError) as e:
        raise ReportError(
            "Failed to load exported matrix", path=str(descriptor_path), reason=str(e)
        )
    return raw.reshape(descriptor["shape"], order="F")
