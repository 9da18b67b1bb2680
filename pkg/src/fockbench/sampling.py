"""
Seeded generators for random verification instances.

Every trial owns its generator, seeded from (seed XOR trial, suite salt), so
a trial draws the same instances whether suites run alone or together and
whether trials run serially or concurrently.
"""

import logging
import zlib
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .autgroup import JUnitary, make_junitary
from .config import get_settings
from .exceptions import ValidationError
from .linop import op_norm
from .redheffer import BlockSystem2x2
from .rowcon import RowContraction

logger = logging.getLogger(__name__)

SYSTEM_KINDS = ("contraction", "unitary", "isometry", "coisometry")
# Range of |phi_X(0)| for strongly hyperbolic automorphisms
HYPERBOLIC_OFFSETS = (0.3, 0.4)


def suite_salt(name: str) -> int:
    """Stable integer derived from a suite name."""
    return zlib.crc32(name.encode("utf-8"))


class InstanceSampler:
    """Random matrices, row contractions and J-unitaries for one trial."""

    def __init__(self, seed: int, trial: int = 0, salt: int = 0) -> None:
        """
        Args:
            seed: base seed of the run
            trial: trial index
            salt: per-suite salt (see suite_salt)
        """
        if seed < 0 or trial < 0:
            raise ValidationError(
                "Seeds and trial indices must be non-negative",
                field="seed",
                value=(seed, trial),
            )
        self.seed = seed
        self.trial = trial
        self.salt = salt
        self.rng = np.random.default_rng([seed ^ trial, salt])

    def ginibre(self, p: int, q: int) -> np.ndarray:
        """p x q matrix of independent standard complex Gaussians."""
        return (
            self.rng.standard_normal((p, q)) + 1j * self.rng.standard_normal((p, q))
        ) / np.sqrt(2)

    def contraction(self, p: int, q: int, norm: Optional[float] = None) -> np.ndarray:
        """A p x q matrix with the given norm (uniform in [0.1, 0.95] if omitted)."""
        target = self.rng.uniform(0.1, 0.95) if norm is None else norm
        G = self.ginibre(p, q)
        scale = op_norm(G)
        return G * (target / scale) if scale > 0 else G

    def unitary(self, k: int) -> np.ndarray:
        """Haar-distributed k x k unitary (QR of a Ginibre matrix with phases fixed)."""
        if k == 0:
            return np.zeros((0, 0), dtype=complex)
        Q, R = scipy.linalg.qr(self.ginibre(k, k))
        phases = np.diag(R) / np.abs(np.diag(R))
        return Q * phases

    def isometry(self, p: int, q: int) -> np.ndarray:
        """p x q matrix with orthonormal columns (p >= q)."""
        if p < q:
            raise ValidationError(
                f"An isometry C^{q} -> C^{p} needs p >= q", field="shape", value=(p, q)
            )
        return self.unitary(p)[:, :q]

    def block_system(
        self, dims: Tuple[int, int, int, int], kind: str = "contraction"
    ) -> BlockSystem2x2:
        """
        A random system with dimensions (X, U, Y, Z) of the given class.

        Isometric systems need Y + Z >= X + U, coisometric ones the reverse,
        unitary ones equality.
        """
        if kind not in SYSTEM_KINDS:
            raise ValidationError(
                f"Unknown system kind '{kind}'", field="kind", value=kind,
                expected_type="|".join(SYSTEM_KINDS),
            )
        x, u, y, z = dims
        rows, cols = y + z, x + u
        if kind == "contraction":
            M = self.contraction(rows, cols)
        elif kind == "unitary":
            if rows != cols:
                raise ValidationError(
                    "A unitary system needs Y + Z = X + U", field="dims", value=dims
                )
            M = self.unitary(rows)
        elif kind == "isometry":
            M = self.isometry(rows, cols)
        else:
            M = self.isometry(cols, rows).conj().T
        return BlockSystem2x2.from_matrix(M, x, y)

    def system_dims(self, max_dim: int = 4) -> Tuple[int, int, int, int]:
        return tuple(int(v) for v in self.rng.integers(1, max_dim + 1, size=4))

    def compatible_pair(
        self, kind: str = "contraction", max_dim: int = 4
    ) -> Tuple[BlockSystem2x2, BlockSystem2x2]:
        """
        Systems L, L1 with U1 = Z and X = Y1, so that L o L1 is defined.

        Dimensions are drawn so that the requested class is attainable.
        """
        if kind == "unitary":
            # L: X + U -> Y + Z and L1: X1 + Z -> X + Z1, both square
            y, z = (int(v) for v in self.rng.integers(1, max_dim + 1, size=2))
            x = int(self.rng.integers(1, y + z))
            u = y + z - x
            low = max(1, x - z)
            x1 = int(self.rng.integers(low, low + max_dim))
            z1 = x1 + z - x
            return (
                self.block_system((x, u, y, z), kind),
                self.block_system((x1, z, x, z1), kind),
            )
        x, u, y, z = self.system_dims(max_dim)
        x1, z1 = (int(v) for v in self.rng.integers(1, max_dim + 1, size=2))
        extra = int(self.rng.integers(0, 3))
        if kind == "isometry":
            y = max(1, x + u - z) + extra
            z1 = max(0, x1 + z - x) + extra
        elif kind == "coisometry":
            u = max(1, y + z - x) + extra
            x1 = max(1, x + z1 - z) + extra
        return (
            self.block_system((x, u, y, z), kind),
            self.block_system((x1, z, x, z1), kind),
        )

    def ball_point(self, n: int, max_radius: float = 0.9, min_radius: float = 0.0) -> np.ndarray:
        """A point of the open unit ball in C^n with radius in [min_radius, max_radius]."""
        direction = self.ginibre(1, n).ravel()
        direction /= np.linalg.norm(direction)
        return direction * self.rng.uniform(min_radius, max_radius)

    def row_contraction(
        self, n: int, m: int, max_norm: Optional[float] = None
    ) -> RowContraction:
        """A strict row contraction with row norm uniform in [0.05, max_norm]."""
        max_norm = get_settings().max_row_norm if max_norm is None else max_norm
        row = self.contraction(m, n * m, norm=self.rng.uniform(0.05, max_norm))
        return RowContraction.from_matrices([row[:, i * m : (i + 1) * m] for i in range(n)])

    def commuting_row(
        self, n: int, m: int, max_norm: Optional[float] = None
    ) -> RowContraction:
        """
        Commuting normal T_i = W diag(lambda^(k)_i) W^*.

        The joint eigenvalues lambda^(k) are ball points of norm <= max_norm,
        which is then the row norm.
        """
        max_norm = get_settings().max_row_norm if max_norm is None else max_norm
        points = np.stack([self.ball_point(n, max_radius=max_norm) for _ in range(m)])
        W = self.unitary(m)
        return RowContraction.from_matrices(
            [W @ np.diag(points[:, i]) @ W.conj().T for i in range(n)]
        )

    def junitary(self, n: int, max_boost: Optional[float] = None) -> JUnitary:
        """exp of a random J-skew matrix, normalized to x > 0."""
        return make_junitary("random", n, rng=self.rng, max_boost=max_boost)

    def hyperbolic_junitary(
        self, n: int, offsets: Tuple[float, float] = HYPERBOLIC_OFFSETS
    ) -> JUnitary:
        """A Mobius map with |phi_X(0)| drawn from offsets, followed by a Haar rotation."""
        low, high = offsets
        mobius = make_junitary(
            "mobius", n, mu=self.ball_point(n, max_radius=high, min_radius=low)
        )
        rotation = make_junitary(
            "rotation", n, W=self.unitary(n), theta=self.rng.uniform(-np.pi, np.pi)
        )
        return mobius @ rotation
