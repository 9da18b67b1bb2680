"""
Redheffer products of 2x2 block systems.

A block system L = [[A, B], [C, D]] maps X (+) U -> Y (+) Z. Composing L with
L1: X1 (+) U1 -> Y1 (+) Z1 closes the feedback loop Z = U1, Y1 = X and yields
a system X1 (+) U -> Y (+) Z1. The loop is well posed when I - B1 C is
invertible; this module enforces that through a reciprocal condition number.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .config import get_settings
from .exceptions import SpaceMismatchError, ValidationError, WellPosednessError

logger = logging.getLogger(__name__)


def _as_block(M: object, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    block = np.array(M, dtype=complex)
    if block.ndim == 0:
        block = block.reshape(1, 1)
    elif block.ndim == 1:
        if block.size == 0 and rows is not None and cols is not None:
            block = block.reshape(rows, cols)
        else:
            block = block.reshape(1, -1)
    if block.ndim != 2:
        raise ValidationError(
            "Blocks must be matrices", field="block", value=block.shape
        )
    return block


class BlockSystem2x2(BaseModel):
    """
    A 2x2 block operator matrix with named input/output dimensions.

    Blocks: A: X -> Y, B: U -> Y, C: X -> Z, D: U -> Z. The output space Z may
    be zero-dimensional, in which case C and D are genuinely empty.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @model_validator(mode="after")
    def blocks_must_be_consistent(self) -> "BlockSystem2x2":
        y, x = self.A.shape
        if self.B.shape[0] != y or self.C.shape[1] != x:
            raise SpaceMismatchError(
                "Blocks A, B, C disagree on the spaces X and Y",
                expected={"X": x, "Y": y},
                actual={"B": self.B.shape, "C": self.C.shape},
            )
        z, u = self.C.shape[0], self.B.shape[1]
        if self.D.shape != (z, u):
            raise SpaceMismatchError(
                "Block D disagrees with the spaces U and Z",
                expected=(z, u),
                actual=self.D.shape,
            )
        return self

    @classmethod
    def from_blocks(
        cls,
        A: object,
        B: object,
        C: object,
        D: object,
        dims: Optional[Tuple[int, int, int, int]] = None,
    ) -> "BlockSystem2x2":
        """
        Build a system from four blocks.

        Args:
            A, B, C, D: the blocks (scalars and arrays are accepted)
            dims: optional (X, U, Y, Z) used to shape empty blocks

        Returns:
            The validated block system
        """
        x = u = y = z = None
        if dims is not None:
            x, u, y, z = dims
        blocks = {
            "A": _as_block(A, y, x),
            "B": _as_block(B, y, u),
            "C": _as_block(C, z, x),
            "D": _as_block(D, z, u),
        }
        for block in blocks.values():
            block.setflags(write=False)
        return cls(**blocks)

    @classmethod
    def identity(cls, x_dim: int, u_dim: int) -> "BlockSystem2x2":
        """The unit system I on X (+) U, with Y = X and Z = U."""
        return cls.from_blocks(
            np.eye(x_dim),
            np.zeros((x_dim, u_dim)),
            np.zeros((u_dim, x_dim)),
            np.eye(u_dim),
            dims=(x_dim, u_dim, x_dim, u_dim),
        )

    @classmethod
    def from_matrix(cls, M: np.ndarray, x_dim: int, y_dim: int) -> "BlockSystem2x2":
        """Split a full matrix into blocks, with X and Y of the given sizes."""
        M = np.asarray(M, dtype=complex)
        return cls.from_blocks(
            M[:y_dim, :x_dim],
            M[:y_dim, x_dim:],
            M[y_dim:, :x_dim],
            M[y_dim:, x_dim:],
            dims=(x_dim, M.shape[1] - x_dim, y_dim, M.shape[0] - y_dim),
        )

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        """The dimensions (X, U, Y, Z)."""
        return (self.A.shape[1], self.B.shape[1], self.A.shape[0], self.C.shape[0])

    def matrix(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def first_row(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.A, self.B

    def __repr__(self) -> str:
        x, u, y, z = self.dims
        return f"BlockSystem2x2(X={x}, U={u}, Y={y}, Z={z})"


def _inverse(M: np.ndarray) -> np.ndarray:
    if M.size == 0:
        return np.zeros(M.shape, dtype=complex)
    return np.linalg.inv(M)


def feedback_margin(C: np.ndarray, B1: np.ndarray) -> Tuple[float, float]:
    """Smallest singular value and reciprocal condition number of I - B1 C."""
    loop = np.eye(B1.shape[0], dtype=complex) - B1 @ C
    if loop.size == 0:
        return 1.0, 1.0
    singular_values = np.linalg.svd(loop, compute_uv=False)
    sigma_max = singular_values[0]
    sigma_min = singular_values[-1]
    rcond = sigma_min / sigma_max if sigma_max > 0 else 0.0
    return float(sigma_min), float(rcond)


def feedback_resolvent(
    C: np.ndarray, B1: np.ndarray, rcond_threshold: Optional[float] = None
) -> np.ndarray:
    """
    The resolvent (I - B1 C)^{-1}.

    Raises:
        WellPosednessError: If the reciprocal condition number is below threshold
    """
    threshold = (
        get_settings().redheffer_rcond if rcond_threshold is None else rcond_threshold
    )
    sigma_min, rcond = feedback_margin(C, B1)
    logger.debug(f"Feedback loop sigma_min={sigma_min:.3e}, rcond={rcond:.3e}")
    if rcond < threshold:
        raise WellPosednessError(
            sigma_min=sigma_min, rcond=rcond, threshold=threshold
        )
    return _inverse(np.eye(B1.shape[0], dtype=complex) - B1 @ C)


def _check_compatible(L: BlockSystem2x2, L1: BlockSystem2x2) -> None:
    x, _, _, z = L.dims
    _, u1, y1, _ = L1.dims
    if u1 != z or y1 != x:
        raise SpaceMismatchError(
            "Redheffer product needs U1 = Z and X = Y1",
            expected={"U1": z, "Y1": x},
            actual={"U1": u1, "Y1": y1},
        )


def redheffer_product(
    L: BlockSystem2x2,
    L1: BlockSystem2x2,
    rcond_threshold: Optional[float] = None,
) -> BlockSystem2x2:
    """
    Compose two block systems by the Redheffer (star) product.

    Args:
        L: outer system X (+) U -> Y (+) Z
        L1: inner system X1 (+) U1 -> Y1 (+) Z1 with U1 = Z and Y1 = X
        rcond_threshold: override for the well-posedness threshold

    Returns:
        The composed system X1 (+) U -> Y (+) Z1

    Raises:
        SpaceMismatchError: If the spaces do not match
        WellPosednessError: If I - B1 C is numerically singular
    """
    _check_compatible(L, L1)
    S = feedback_resolvent(L.C, L1.B, rcond_threshold)
    # I - C B1 is invertible whenever I - B1 C is
    S_dual = _inverse(np.eye(L.C.shape[0], dtype=complex) - L.C @ L1.B)

    A_new = L.A @ S @ L1.A
    B_new = L.B + L.A @ S @ L1.B @ L.D
    C_new = L1.C + L1.D @ L.C @ S @ L1.A
    D_new = L1.D @ S_dual @ L.D

    x1 = L1.dims[0]
    u = L.dims[1]
    y = L.dims[2]
    z1 = L1.dims[3]
    return BlockSystem2x2.from_blocks(
        A_new, B_new, C_new, D_new, dims=(x1, u, y, z1)
    )


def alpha(
    L: BlockSystem2x2, B1: object, rcond_threshold: Optional[float] = None
) -> np.ndarray:
    """The map B1 -> B + A (I - B1 C)^{-1} B1 D."""
    x, _, _, z = L.dims
    B1 = _as_block(B1, x, z)
    if B1.shape != (x, z):
        raise SpaceMismatchError(
            "alpha needs B1: Z -> X", expected=(x, z), actual=B1.shape
        )
    S = feedback_resolvent(L.C, B1, rcond_threshold)
    return L.B + L.A @ S @ B1 @ L.D


def beta(
    L: BlockSystem2x2,
    A1: object,
    B1: object,
    rcond_threshold: Optional[float] = None,
) -> np.ndarray:
    """The map (A1, B1) -> A (I - B1 C)^{-1} A1."""
    x, _, _, z = L.dims
    B1 = _as_block(B1, x, z)
    A1 = _as_block(A1)
    if B1.shape != (x, z) or A1.shape[0] != x:
        raise SpaceMismatchError(
            "beta needs A1: X1 -> X and B1: Z -> X",
            expected={"A1 rows": x, "B1": (x, z)},
            actual={"A1": A1.shape, "B1": B1.shape},
        )
    S = feedback_resolvent(L.C, B1, rcond_threshold)
    return L.A @ S @ A1
