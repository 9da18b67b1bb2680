"""
Automorphisms of the unit ball and of the noncommutative analytic Toeplitz algebra.

A J-unitary X = [[x, y], [z^t, X']] (J = diag(-1, I_n)) acts on the ball by

    phi_X(lam) = (x - lam z^t)^{-1} (lam X' - y)

and on the creation operators by

    Phi_X(L_i) = (x I - L[z])^{-1} (L[X' e_i] - y_i I),

which is implemented by the unitary U_X whose columns are
U_X e_w = Phi_X(L_w) (x I - L[z])^{-1} e_empty. X -> phi_X is an
antihomomorphism: phi_{X1 X2} = phi_{X2} o phi_{X1}.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, model_validator

from .config import get_settings
from .exceptions import ValidationError
from .fock import (
    creation_matrices,
    fock_dim,
    nilpotent_solve,
    pencil,
    row_operator,
    vacuum_embedding,
)
from .linop import op_norm, unitarity_residual
from .redheffer import BlockSystem2x2, alpha

logger = logging.getLogger(__name__)

JUNITARY_KINDS = ("identity", "mobius", "rotation", "random")


def j_form(n: int) -> np.ndarray:
    """J = diag(-1, I_n)."""
    J = np.eye(n + 1, dtype=complex)
    J[0, 0] = -1.0
    return J


class JUnitary(BaseModel):
    """An (n+1) x (n+1) matrix X with X* J X = J."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    X: np.ndarray

    @model_validator(mode="after")
    def must_preserve_form(self) -> "JUnitary":
        if self.X.ndim != 2 or self.X.shape[0] != self.X.shape[1] or self.X.shape[0] < 2:
            raise ValidationError(
                "A J-unitary must be square of size n + 1 >= 2",
                field="X",
                value=self.X.shape,
            )
        residual = self.residual()
        tol = get_settings().junitary_tol
        if residual > tol:
            raise ValidationError(
                f"X*JX differs from J by {residual:.3e} (tolerance {tol:g})",
                field="X",
                value=residual,
            )
        return self

    @classmethod
    def of(cls, X: object) -> "JUnitary":
        if isinstance(X, JUnitary):
            return X
        matrix = np.array(X, dtype=complex)
        matrix.setflags(write=False)
        return cls(X=matrix)

    @property
    def n(self) -> int:
        return self.X.shape[0] - 1

    @property
    def x(self) -> complex:
        return complex(self.X[0, 0])

    @property
    def y(self) -> np.ndarray:
        """First row without its first entry (1 x n)."""
        return self.X[0, 1:]

    @property
    def z(self) -> np.ndarray:
        """First column without its first entry, read as a row (z^t is the column)."""
        return self.X[1:, 0]

    @property
    def X_prime(self) -> np.ndarray:
        return self.X[1:, 1:]

    def residual(self) -> float:
        J = j_form(self.X.shape[0] - 1)
        return op_norm(self.X.conj().T @ J @ self.X - J)

    def inverse(self) -> "JUnitary":
        """X^{-1} = J X* J."""
        J = j_form(self.n)
        return JUnitary.of(J @ self.X.conj().T @ J)

    def compose(self, other: "JUnitary") -> "JUnitary":
        """The matrix product self @ other."""
        if other.n != self.n:
            raise ValidationError(
                "Cannot compose J-unitaries of different sizes",
                field="n",
                value=(self.n, other.n),
            )
        return JUnitary.of(self.X @ other.X)

    def __matmul__(self, other: "JUnitary") -> "JUnitary":
        return self.compose(other)

    def with_positive_corner(self) -> "JUnitary":
        """Multiply by the unimodular scalar that makes x real and positive."""
        phase = np.conj(self.x) / abs(self.x)
        return JUnitary.of(self.X * phase)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "entries": [[[v.real, v.imag] for v in row] for row in self.X.tolist()],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JUnitary":
        try:
            entries = np.array(
                [[complex(re, im) for re, im in row] for row in data["entries"]],
                dtype=complex,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed J-unitary: {e}", field="entries")
        if entries.shape != (data.get("n", -1) + 1,) * 2:
            raise ValidationError(
                "Entry count does not match n", field="n", value=data.get("n")
            )
        return cls.of(entries)


class UnitaryForm(BaseModel):
    """The unitary Y = [[a, b], [c, d]] attached to a J-unitary."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Y: np.ndarray

    @model_validator(mode="after")
    def must_be_unitary(self) -> "UnitaryForm":
        residual = unitarity_residual(self.Y)
        tol = get_settings().junitary_tol
        if residual > tol:
            raise ValidationError(
                f"Y is not unitary (residual {residual:.3e})", field="Y", value=residual
            )
        return self

    @classmethod
    def of(cls, Y: object) -> "UnitaryForm":
        matrix = np.array(Y, dtype=complex)
        matrix.setflags(write=False)
        return cls(Y=matrix)

    @property
    def n(self) -> int:
        return self.Y.shape[0] - 1

    @property
    def a(self) -> complex:
        return complex(self.Y[0, 0])

    @property
    def b(self) -> np.ndarray:
        return self.Y[0:1, 1:]

    @property
    def c(self) -> np.ndarray:
        return self.Y[1:, 0:1]

    @property
    def d(self) -> np.ndarray:
        return self.Y[1:, 1:]

    def adjoint(self) -> "UnitaryForm":
        return UnitaryForm.of(self.Y.conj().T)


def unitary_form(X: JUnitary) -> UnitaryForm:
    """a = 1/x, b = -y/x, c = z^t/x, d = X' - z^t y / x."""
    X = JUnitary.of(X)
    x = X.x
    y = X.y.reshape(1, -1)
    zt = X.z.reshape(-1, 1)
    Y = np.block(
        [
            [np.array([[1 / x]]), -y / x],
            [zt / x, X.X_prime - zt @ y / x],
        ]
    )
    return UnitaryForm.of(Y)


def junitary_form(Y: UnitaryForm, tol: Optional[float] = None) -> JUnitary:
    """
    Inverse of unitary_form: x = 1/a, y = -b/a, z^t = c/a, X' = d - c b / a.

    Raises:
        ValidationError: If a vanishes
    """
    tol = get_settings().junitary_tol if tol is None else tol
    a = Y.a
    if abs(a) <= tol:
        raise ValidationError(
            "The corner a of Y vanishes; no J-unitary corresponds", field="a", value=abs(a)
        )
    X = np.block(
        [
            [np.array([[1 / a]]), -Y.b / a],
            [Y.c / a, Y.d - Y.c @ Y.b / a],
        ]
    )
    return JUnitary.of(X)


def _boost(v: np.ndarray) -> np.ndarray:
    n = v.size
    norm = float(np.linalg.norm(v))
    gamma = 1 / np.sqrt(1 - norm**2)
    row = v.reshape(1, n)
    X = np.empty((n + 1, n + 1), dtype=complex)
    X[0, 0] = gamma
    X[0:1, 1:] = gamma * row
    X[1:, 0:1] = gamma * row.conj().T
    X[1:, 1:] = np.eye(n) + (gamma**2 / (1 + gamma)) * row.conj().T @ row
    return X


def make_junitary(
    kind: str,
    n: int,
    mu: Optional[Sequence[complex]] = None,
    theta: float = 0.0,
    W: Optional[np.ndarray] = None,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    max_boost: Optional[float] = None,
) -> JUnitary:
    """
    Generate an element of U(1, n).

    Args:
        kind: "identity", "mobius", "rotation" or "random"
        n: number of variables
        mu: target point for "mobius"; the result satisfies phi_X(0) = mu
        theta: phase for "rotation"
        W: n x n unitary for "rotation"
        seed: seed for "random" (ignored when rng is given)
        rng: generator for "random"
        max_boost: bound on the hyperbolic part of "random"

    Returns:
        The J-unitary; "random" results are normalized so that x > 0

    Raises:
        ValidationError: For an unknown kind, |mu| >= 1 or non-unitary W
    """
    if kind not in JUNITARY_KINDS:
        raise ValidationError(
            f"Unknown J-unitary kind '{kind}'", field="kind", value=kind,
            expected_type="|".join(JUNITARY_KINDS),
        )
    if kind == "identity":
        return JUnitary.of(np.eye(n + 1))

    if kind == "mobius":
        point = np.asarray(mu if mu is not None else np.zeros(n), dtype=complex).ravel()
        if point.size != n or np.linalg.norm(point) >= 1:
            raise ValidationError(
                "Mobius target must be a point of the open unit ball in C^n",
                field="mu",
                value=point.tolist(),
            )
        return JUnitary.of(_boost(-point))

    if kind == "rotation":
        rotation = np.eye(n, dtype=complex) if W is None else np.asarray(W, dtype=complex)
        if rotation.shape != (n, n) or unitarity_residual(rotation) > get_settings().junitary_tol:
            raise ValidationError("Rotation block must be an n x n unitary", field="W")
        X = np.zeros((n + 1, n + 1), dtype=complex)
        X[0, 0] = np.exp(1j * theta)
        X[1:, 1:] = rotation
        return JUnitary.of(X)

    # J-skew generator S = [[i alpha, beta], [beta^*, K]] with K skew-Hermitian
    rng = rng if rng is not None else np.random.default_rng(seed)
    max_boost = get_settings().max_boost if max_boost is None else max_boost
    beta = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    beta *= rng.uniform(0, max_boost) / max(np.linalg.norm(beta), 1e-300)
    K = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    K = (K - K.conj().T) / 2
    S = np.zeros((n + 1, n + 1), dtype=complex)
    S[0, 0] = 1j * rng.uniform(-np.pi, np.pi)
    S[0, 1:] = beta
    S[1:, 0] = beta.conj()
    S[1:, 1:] = K
    X = scipy.linalg.expm(S)
    return JUnitary.of(X).with_positive_corner()


def phi(X: JUnitary, lam: Sequence[complex]) -> np.ndarray:
    """
    The ball automorphism phi_X(lam) = (x - lam z^t)^{-1}(lam X' - y).

    Raises:
        ValidationError: If lam is not a point of the open ball
    """
    X = JUnitary.of(X)
    point = np.asarray(lam, dtype=complex).ravel()
    if point.size != X.n or np.linalg.norm(point) >= 1:
        raise ValidationError(
            "phi_X is defined on the open unit ball", field="lambda", value=point.tolist()
        )
    return (point @ X.X_prime - X.y) / (X.x - point @ X.z)


def ball_offset(X: JUnitary) -> float:
    """|phi_X(0)| = |y| / |x|; the geometric rate of every truncation tail."""
    X = JUnitary.of(X)
    return float(np.linalg.norm(X.y)) / abs(X.x)


def system_on_coefficients(Y: UnitaryForm, m: int) -> BlockSystem2x2:
    """L_Y (x) I_m on C^m (+) (C^n (x) C^m), with the slot index major on C^n (x) C^m."""
    eye = np.eye(m, dtype=complex)
    return BlockSystem2x2.from_blocks(
        Y.a * eye,
        np.kron(Y.b, eye),
        np.kron(Y.c, eye),
        np.kron(Y.d, eye),
        dims=(m, Y.n * m, m, Y.n * m),
    )


def system_on_fock(Y: UnitaryForm, n: int, N: int, m: int = 1) -> BlockSystem2x2:
    """I_F (x) L_Y (x) I_m: every block acts on the coefficients of each Fock vector."""
    coefficients = system_on_coefficients(Y, m)
    eye = np.eye(fock_dim(n, N), dtype=complex)
    x, u, y, z = coefficients.dims
    dim = eye.shape[0]
    return BlockSystem2x2.from_blocks(
        np.kron(eye, coefficients.A),
        np.kron(eye, coefficients.B),
        np.kron(eye, coefficients.C),
        np.kron(eye, coefficients.D),
        dims=(dim * x, dim * u, dim * y, dim * z),
    )


class FockAutomorphism:
    """
    Phi_X on the Fock space truncated at level N.

    Images of the generators are applied through sparse creation operators and
    the exact Neumann solve for x I - L[z]; dense images are only formed on
    request.
    """

    def __init__(self, X: JUnitary, N: int, side: str = "left") -> None:
        self.X = JUnitary.of(X)
        self.n = self.X.n
        self.N = N
        self.side = side
        self.dim = fock_dim(self.n, N)
        self._creations = creation_matrices(side, self.n, N, sparse=True)
        self._pencil = pencil(self.X.z, self._creations)
        self._numerators = [
            pencil(self.X.X_prime[:, i], self._creations) for i in range(self.n)
        ]

    def resolve(self, V: np.ndarray) -> np.ndarray:
        """(x I - L[z])^{-1} V."""
        return nilpotent_solve(self.X.x, self._pencil, V, self.N)

    def apply_image(self, i: int, V: np.ndarray) -> np.ndarray:
        """Phi_X(L_i) V for a 1-based generator index."""
        numerator = self._numerators[i - 1] @ V - self.X.y[i - 1] * V
        return self.resolve(numerator)

    def images(self) -> List[np.ndarray]:
        eye = np.eye(self.dim, dtype=complex)
        return [self.apply_image(i, eye) for i in range(1, self.n + 1)]

    def vacuum_column(self) -> np.ndarray:
        """(x I - L[z])^{-1} e_empty as a flat vector."""
        return self.resolve(vacuum_embedding(self.n, self.N))[:, 0]

    def implementing_columns(self, max_length: int) -> np.ndarray:
        """
        The columns U_X e_w for every word of length at most max_length.

        Rows are those of this truncation; since Phi_X(L_i) never lowers the
        level, rows of level <= N are exact even when max_length > N.
        """
        column = self.vacuum_column().reshape(-1, 1)
        blocks = [column]
        for _ in range(max_length):
            # U e_{iw} = Phi_X(L_i) U e_w, so level k + 1 is the hstack over i
            column = np.hstack(
                [self.apply_image(i, column) for i in range(1, self.n + 1)]
            )
            blocks.append(column)
        return np.hstack(blocks)


def generator_images(X: JUnitary, n: int, N: int) -> List[np.ndarray]:
    """
    The truncated images Phi_X(L_1), ..., Phi_X(L_n).

    Each is the exact compression, since L[z] is nilpotent after truncation.
    """
    X = JUnitary.of(X)
    if X.n != n:
        raise ValidationError(
            f"J-unitary acts on C^{X.n}, not C^{n}", field="n", value=n
        )
    return FockAutomorphism(X, N).images()


def right_generator_images(X: JUnitary, n: int, N: int) -> List[np.ndarray]:
    """Phi_X applied to the right creation operators R_1, ..., R_n."""
    X = JUnitary.of(X)
    if X.n != n:
        raise ValidationError(
            f"J-unitary acts on C^{X.n}, not C^{n}", field="n", value=n
        )
    return FockAutomorphism(X, N, side="right").images()


def alpha_generator_images(
    Y: UnitaryForm, n: int, N: int, side: str = "left"
) -> List[np.ndarray]:
    """alpha_{L_Y}(L) computed with the Redheffer engine, split into its n entries."""
    system = system_on_fock(Y, n, N)
    row = row_operator(creation_matrices(side, n, N, sparse=True)).toarray()
    image = alpha(system, row)
    # columns of the row are indexed (w, i) with the Fock index major
    return [image[:, i::n] for i in range(n)]


def implementing_unitary(
    X: JUnitary, n: int, N: int, rows_level: Optional[int] = None
) -> np.ndarray:
    """
    The compression of U_X to the Fock space truncated at level N.

    Args:
        X: J-unitary
        n: number of variables
        N: truncation level for the columns
        rows_level: if given, only rows of level <= rows_level are returned;
            they are computed in that smaller truncation and are still exact

    Returns:
        (fock_dim(n, rows_level or N) x fock_dim(n, N)) matrix
    """
    X = JUnitary.of(X)
    if X.n != n:
        raise ValidationError(
            f"J-unitary acts on C^{X.n}, not C^{n}", field="n", value=n
        )
    M = N if rows_level is None else min(rows_level, N)
    logger.debug(f"Building U_X rows <= {M}, columns <= {N} (n={n})")
    return FockAutomorphism(X, M).implementing_columns(N)


def truncation_coupling(U_rows: np.ndarray) -> float:
    """
    ||P U_X P_{>N}|| for the rows P of U_X given with every column of level <= N.

    U_X is unitary on the full Fock space, so the discarded columns carry
    I - U_rows U_rows^* exactly. Roundoff keeps the value above sqrt(eps).
    """
    gram = np.eye(U_rows.shape[0], dtype=complex) - U_rows @ U_rows.conj().T
    largest = np.linalg.eigvalsh((gram + gram.conj().T) / 2)[-1]
    return float(np.sqrt(max(largest, 0.0)))


def coupling_profile(X: JUnitary, n: int, N: int, top: int) -> np.ndarray:
    """truncation_coupling for every row level 0..top, from a single build of U_X."""
    U = implementing_unitary(X, n, N, rows_level=top)
    return np.array(
        [truncation_coupling(U[: fock_dim(n, level)]) for level in range(top + 1)]
    )


def vacuum_column(X: JUnitary, n: int, N: int) -> np.ndarray:
    """U_X e_empty."""
    return FockAutomorphism(JUnitary.of(X), N).vacuum_column()


def implementation_residuals(
    X: JUnitary, N: int, margin: int, side: str = "left"
) -> Tuple[float, float]:
    """
    max_i ||P (U_X A_i U_X^* - Phi_X(A_i)) P|| on levels <= N - margin.

    A_i are the left (or right) creation operators. Returns the residual and
    the coupling ||P_top U_X P_{>N}||, which bounds it.
    """
    X = JUnitary.of(X)
    n = X.n
    top = N - margin
    U_top = implementing_unitary(X, n, N, rows_level=top)
    size = fock_dim(n, top)
    creations = creation_matrices(side, n, N, sparse=True)
    automorphism = FockAutomorphism(X, top, side=side)
    eye = np.eye(size, dtype=complex)
    residual = 0.0
    for i in range(1, n + 1):
        conjugated = U_top @ (creations[i - 1] @ U_top.conj().T)
        image = automorphism.apply_image(i, eye)
        residual = max(residual, op_norm(conjugated - image))
    return residual, truncation_coupling(U_top)


def column_norm_deficits(U: np.ndarray) -> np.ndarray:
    """1 - |U e_w|^2 per column; geometric in N at rate (|z|/|x|)^2."""
    return 1.0 - np.sum(np.abs(U) ** 2, axis=0)
