"""Two tiny systems that separate the inclusion and exclusion criteria."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockmat import BlockMatrix, BlockSignal, least_squares
from .pursuit import ipc_scores, score_rcc, score_rmc, spc_scores

__all__ = ["DemoCheck", "inclusion_demo", "exclusion_demo", "evaluate_demos"]

_R2 = 1 / np.sqrt(2)


def inclusion_demo():
    """Three 3x2 blocks where IPC prefers block 1 (0-based) but the truth is block 0."""
    F1 = np.array([[_R2, 0], [0, 1], [_R2, 0]])
    F2 = np.array([[_R2, 0], [_R2, 1], [0, 0]])
    F3 = np.array([[1, 0], [0, 0], [0, 1]])
    d = np.array([_R2, 4, _R2])
    return BlockMatrix.from_blocks([F1, F2, F3]), d


def exclusion_demo(perturbed: bool = True):
    """Two 4x2 blocks; the truth is block 0. ``perturbed`` adds 0.1 to the last entry."""
    s = np.sqrt(101)
    F1 = np.array([[1, 0], [0, 1], [0, 0], [0, 0]], dtype=float)
    F2 = np.array([[0, 0], [0, 0], [1, 10 / s], [0, 1 / s]])
    y = np.array([1, 1, 0, 0.1 if perturbed else 0.0])
    return BlockMatrix.from_blocks([F1, F2]), y


@dataclass(frozen=True)
class DemoCheck:
    name: str
    value: str
    expected: str
    passed: bool


def _fmt(v):
    return "(" + ", ".join(f"{x:.4f}" for x in np.atleast_1d(v)) + ")"


def _shrink_scores(A, y):
    x = BlockSignal(least_squares(A.entries, y), A.block_size)
    rcc = np.array([score_rcc(x, g) for g in range(A.n_blocks)])
    rmc = np.array([score_rmc(A.block(g), x.block(g)) for g in range(A.n_blocks)])
    return rcc, rmc


def evaluate_demos() -> list[DemoCheck]:
    """Scores and selections of both demos against their known values (blocks 0-based)."""
    out = []
    A, d = inclusion_demo()
    ipc, spc = ipc_scores(A, d), spc_scores(A, d)
    ipc_ref = [np.sqrt(17), np.sqrt((0.5 + 2 * np.sqrt(2)) ** 2 + 16), 1.0]
    spc_ref = [4.12, 4.06, 1.00]
    out.append(DemoCheck("inclusion IPC scores", _fmt(ipc), _fmt(ipc_ref), np.allclose(np.round(ipc, 2), np.round(ipc_ref, 2))))
    out.append(DemoCheck("inclusion SPC scores", _fmt(spc), _fmt(spc_ref), np.allclose(np.round(spc, 2), spc_ref)))
    out.append(DemoCheck("inclusion IPC argmax", str(int(np.argmax(ipc))), "1", int(np.argmax(ipc)) == 1))
    out.append(DemoCheck("inclusion SPC argmax", str(int(np.argmax(spc))), "0", int(np.argmax(spc)) == 0))

    A, y = exclusion_demo(perturbed=False)
    rcc, rmc = _shrink_scores(A, y)
    out.append(DemoCheck("exclusion clean RCC argmax", str(int(np.argmax(rcc))), "0", int(np.argmax(rcc)) == 0))
    out.append(DemoCheck("exclusion clean RMC argmax", str(int(np.argmax(rmc))), "0", int(np.argmax(rmc)) == 0))
    A, y = exclusion_demo(perturbed=True)
    rcc, rmc = _shrink_scores(A, y)
    # oracle: direct solve of the square system
    x = np.linalg.solve(A.entries, y)
    rmc_ref = [np.linalg.norm(A.block(g) @ x[2 * g:2 * g + 2]) for g in range(2)]
    out.append(DemoCheck("exclusion perturbed RCC argmax", str(int(np.argmax(rcc))), "1", int(np.argmax(rcc)) == 1))
    out.append(DemoCheck("exclusion perturbed RMC argmax", str(int(np.argmax(rmc))), "0", int(np.argmax(rmc)) == 0))
    out.append(DemoCheck("exclusion perturbed RMC scores", _fmt(rmc), _fmt([np.sqrt(2), 0.1]),
                         np.allclose(rmc, [np.sqrt(2), 0.1], atol=1e-6) and np.allclose(rmc, rmc_ref, atol=1e-6)))
    return out
