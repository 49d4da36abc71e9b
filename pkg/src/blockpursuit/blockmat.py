"""Block-structured matrices and the projection primitives built on them.

Blocks are stored contiguously in one dense array: block ``g`` occupies
columns ``g*M .. (g+1)*M``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "BlockMatrix",
    "BlockSignal",
    "block_support",
    "block_submatrix",
    "least_squares",
    "project",
    "residual",
    "column_normalize",
    "extreme_singular_values",
    "orthonormal_basis",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """Dense ``N x (G*M)`` matrix partitioned into ``G`` blocks of ``M`` columns."""

    entries: np.ndarray
    n_blocks: int
    block_size: int

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-D array")
        if self.n_blocks < 1 or self.block_size < 1 or entries.shape[0] < 1:
            raise ValueError("n_blocks, block_size and row count must be positive")
        if entries.shape[1] != self.n_blocks * self.block_size:
            raise ValueError(
                f"column count {entries.shape[1]} != n_blocks*block_size "
                f"({self.n_blocks}*{self.block_size})"
            )
        if not np.all(np.isfinite(entries)):
            raise ValueError("entries must be finite")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "BlockMatrix":
        blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]
        m = blocks[0].shape[1]
        if any(b.shape[1] != m for b in blocks):
            raise ValueError("all blocks must have the same number of columns")
        return cls(np.hstack(blocks), len(blocks), m)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def block(self, g: int) -> np.ndarray:
        if not 0 <= g < self.n_blocks:
            raise ValueError(f"block index {g} out of range [0, {self.n_blocks})")
        m = self.block_size
        return self.entries[:, g * m:(g + 1) * m]

    def stacked(self) -> np.ndarray:
        """View of the blocks as a ``(G, N, M)`` array."""
        n, m, g = self.n_rows, self.block_size, self.n_blocks
        return self.entries.reshape(n, g, m).transpose(1, 0, 2)

    def column_indices(self, support: Iterable[int]) -> np.ndarray:
        m = self.block_size
        support = list(support)
        if not support:
            return np.zeros(0, dtype=int)
        return (np.asarray(support)[:, None] * m + np.arange(m)).ravel()


@dataclass(frozen=True, eq=False)
class BlockSignal:
    """Coefficient vector of length ``G*M`` with the matching block partition."""

    coeffs: np.ndarray
    block_size: int

    def __post_init__(self):
        coeffs = _frozen(np.ravel(self.coeffs))
        if self.block_size < 1 or coeffs.size % self.block_size:
            raise ValueError("signal length must be a positive multiple of block_size")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, n_blocks: int, block_size: int) -> "BlockSignal":
        return cls(np.zeros(n_blocks * block_size), block_size)

    @classmethod
    def from_support(cls, n_blocks, block_size, support, values) -> "BlockSignal":
        c = np.zeros(n_blocks * block_size)
        if len(support):
            idx = (np.asarray(support)[:, None] * block_size + np.arange(block_size)).ravel()
            c[idx] = np.ravel(values)
        return cls(c, block_size)

    @property
    def n_blocks(self) -> int:
        return self.coeffs.size // self.block_size

    def blocks(self) -> np.ndarray:
        return self.coeffs.reshape(self.n_blocks, self.block_size)

    def block(self, g: int) -> np.ndarray:
        if not 0 <= g < self.n_blocks:
            raise ValueError(f"block index {g} out of range [0, {self.n_blocks})")
        return self.blocks()[g]

    def support(self) -> tuple[int, ...]:
        return tuple(int(g) for g in np.flatnonzero(np.abs(self.blocks()).sum(axis=1) != 0))

    def restrict(self, support: Iterable[int]) -> np.ndarray:
        """Stacked sub-vector over ``support`` in increasing block order."""
        support = sorted(support)
        if not support:
            return np.zeros(0)
        return self.blocks()[support].ravel()


def block_support(indices: Iterable[int], n_blocks: int) -> tuple[int, ...]:
    """Validate and canonicalize a set of block indices (sorted, unique)."""
    out = sorted(set(int(i) for i in indices))
    if out and (out[0] < 0 or out[-1] >= n_blocks):
        raise ValueError(f"block indices must lie in [0, {n_blocks})")
    return tuple(out)


def block_submatrix(A: BlockMatrix, T: Iterable[int]) -> np.ndarray:
    """Concatenate the blocks listed in ``T`` in increasing index order."""
    T = list(T)
    if not T:
        raise ValueError("support must be nonempty")
    T = block_support(T, A.n_blocks)
    return A.entries[:, A.column_indices(T)]


def _svd_range(B: np.ndarray, rank_tol: float | None):
    U, s, Vt = np.linalg.svd(B, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0], s[:0], Vt[:0]
    if rank_tol is None:
        rank_tol = max(B.shape) * np.finfo(float).eps
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    return U[:, :r], s[:r], Vt[:r]


def _check_dims(B: np.ndarray, v: np.ndarray):
    if B.ndim != 2 or v.ndim != 1 or B.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {B.shape} vs vector {v.shape}")


def least_squares(B, y, rank_tol: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution ``pinv(B) @ y``.

    Singular values below ``rank_tol * sigma_max`` are discarded; the default
    ``rank_tol`` is ``max(B.shape) * eps``.
    """
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_dims(B, y)
    U, s, Vt = _svd_range(B, rank_tol)
    if s.size == 0:
        return np.zeros(B.shape[1])
    return Vt.T @ ((U.T @ y) / s)


def orthonormal_basis(B, rank_tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of ``col(B)`` (numerical rank only)."""
    U, _, _ = _svd_range(np.asarray(B, dtype=float), rank_tol)
    return U


def project(v, B, rank_tol: float | None = None) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the column space of ``B``."""
    B = np.asarray(B, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(B, v)
    U = orthonormal_basis(B, rank_tol)
    return U @ (U.T @ v)


def residual(v, B, rank_tol: float | None = None) -> np.ndarray:
    """``v - project(v, B)``."""
    v = np.asarray(v, dtype=float)
    return v - project(v, B, rank_tol)


def column_normalize(A: BlockMatrix) -> tuple[BlockMatrix, np.ndarray]:
    """Scale every nonzero column to unit 2-norm.

    Returns the normalized matrix and the per-column scales, so that
    ``normalized.entries * scales == A.entries``. Zero columns keep scale 1.
    """
    norms = np.linalg.norm(A.entries, axis=0)
    scales = np.where(norms > 0, norms, 1.0)
    return BlockMatrix(A.entries / scales, A.n_blocks, A.block_size), scales


def extreme_singular_values(B) -> tuple[float, float]:
    """Smallest and largest singular values, counting rank deficiency.

    For a wide matrix the missing singular values are zeros, so ``sigma_min``
    is 0 whenever ``B`` does not have full column rank.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.size == 0:
        raise ValueError("matrix must be nonempty")
    s = np.linalg.svd(B, compute_uv=False)
    smin = 0.0 if B.shape[1] > B.shape[0] else float(s[-1])
    return smin, float(s[0])
