"""Block regression system for varying-coefficient PDE identification.

Each candidate term ``f_g`` becomes one block whose columns are
``f_g(x, t) * B_i(x) * B_j(t)``, so a selected block carries a spatially and
temporally varying coefficient expanded in the spline basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..blockmat import BlockMatrix, column_normalize
from ..pursuit import run_algorithm
from .bspline import BsplineBasis
from .burgers import PdeGrid, solve_burgers
from .features import FeatureTerm, enumerate_dictionary, evaluate_features

__all__ = ["BlockSystem", "assemble_block_system", "identify_pde", "planted_instance", "run_identification"]


@dataclass(frozen=True, eq=False)
class BlockSystem:
    A: BlockMatrix  # column-normalized
    y: np.ndarray
    scales: np.ndarray
    terms: list[FeatureTerm]
    basis: BsplineBasis


def assemble_block_system(values, u_t, basis: BsplineBasis, grid: PdeGrid, terms=None,
                          drop_time_edges: bool = True) -> BlockSystem:
    """Stack feature-times-spline columns into one block matrix.

    Rows are grid points ordered space-major (``x`` outer, ``t`` inner). The
    first and last time samples are dropped by default because ``u_t`` is
    only first-order accurate there.
    """
    terms = enumerate_dictionary() if terms is None else list(terms)
    values = np.asarray(values, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    if values.shape[0] != len(terms) or values.shape[1:] != u_t.shape or u_t.shape != grid.u.shape:
        raise ValueError("feature, u_t and grid shapes are inconsistent")
    t_sel = slice(1, -1) if drop_time_edges else slice(None)
    xx, tt = np.meshgrid(grid.x, grid.t[t_sel], indexing="ij")
    spline = basis.matrix(xx.ravel(), tt.ravel())  # (N, M)
    f = values[:, :, t_sel].reshape(len(terms), -1)  # (G, N)
    entries = (f[:, :, None] * spline[None, :, :]).transpose(1, 0, 2).reshape(spline.shape[0], -1)
    A, scales = column_normalize(BlockMatrix(entries, len(terms), basis.size))
    return BlockSystem(A, u_t[:, t_sel].ravel(), scales, terms, basis)


def identify_pde(system: BlockSystem, k: int = 2, algorithm="gpsp") -> list[FeatureTerm]:
    """Terms of the blocks selected by ``algorithm`` at sparsity ``k``."""
    if k > len(system.terms):
        raise ValueError(f"k={k} exceeds the {len(system.terms)} available terms")
    outcome, _ = run_algorithm(algorithm, system.A, system.y, k)
    return sorted(system.terms[g] for g in outcome.support)


def planted_instance(system: BlockSystem, seed: int, k: int = 2):
    """Noise-free ``y`` built from ``k`` random blocks with N(0, 1) spline coefficients.

    Returns ``(y, support)``; ``support`` is the sorted tuple of planted blocks.
    """
    rng = np.random.default_rng(seed)
    A = system.A
    support = tuple(sorted(int(g) for g in rng.choice(A.n_blocks, size=k, replace=False)))
    y = np.zeros(A.n_rows)
    for g in support:
        y += A.block(g) @ rng.normal(size=A.block_size)
    return y, support


def run_identification(algorithms=("bomp", "bompr", "bcosamp", "bsp", "gpsp"), k: int = 2,
                       grid: PdeGrid | None = None):
    """Full pipeline: solve, build features, assemble, identify with each algorithm."""
    grid = solve_burgers() if grid is None else grid
    values, u_t = evaluate_features(grid)
    system = assemble_block_system(values, u_t, BsplineBasis(), grid)
    return grid, system, {alg: identify_pde(system, k, alg) for alg in algorithms}
