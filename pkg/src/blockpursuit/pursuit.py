"""Greedy block-sparse pursuit algorithms.

Every algorithm here is one instance of the same loop: pick an initial pool,
then repeatedly *expand* it by the blocks best correlated with the residual
and *shrink* it back to ``k`` blocks after a joint least-squares fit. The
variants differ only in

* the inclusion score used to rank blocks against a vector ``d``:
  ``IPC`` = ||F_g^T d|| or ``SPC`` = ||proj(d, F_g)||,
* the exclusion score used when shrinking:
  ``RCC`` = ||x_p[g]|| or ``RMC`` = ||F_g x_p[g]||,
* how many candidates are added per iteration and how the pool starts.

``CriteriaSpec`` captures those choices; ``generic_pursuit`` runs the loop.
Ties are always broken in favour of the lowest block index.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .blockmat import (
    BlockMatrix,
    BlockSignal,
    block_submatrix,
    least_squares,
    project,
)

__all__ = [
    "Inclusion",
    "Exclusion",
    "Expansion",
    "Init",
    "Termination",
    "CriteriaSpec",
    "IterationRecord",
    "PursuitTrace",
    "PursuitOutcome",
    "ALGORITHMS",
    "ABLATION_COMBINATIONS",
    "score_ipc",
    "score_spc",
    "score_rcc",
    "score_rmc",
    "ipc_scores",
    "spc_scores",
    "top_k",
    "generic_pursuit",
    "gpsp",
    "bsp",
    "bcosamp",
    "bomp",
    "bompr",
    "run_algorithm",
    "resolve_criteria",
]

DEFAULT_MAX_ITER = 50
# ||residual|| <= EXACT_FIT_RTOL * ||y|| counts as an exact fit.
EXACT_FIT_RTOL = 1e-12


class Inclusion(enum.Enum):
    IPC = "ipc"
    SPC = "spc"


class Exclusion(enum.Enum):
    RCC = "rcc"
    RMC = "rmc"
    NONE = "none"


class Expansion(enum.Enum):
    K = "k"
    TWO_K = "2k"
    ONE = "1"


class Init(enum.Enum):
    EMPTY = "empty"
    TOP_K_BY_INCLUSION = "top_k"


class Termination(enum.Enum):
    RESIDUAL_STALLED = "residual_stalled"
    MAX_ITER = "max_iter"
    EXACT_FIT = "exact_fit"


@dataclass(frozen=True)
class CriteriaSpec:
    inclusion: Inclusion
    exclusion: Exclusion
    expansion_width: Expansion
    init: Init

    def __post_init__(self):
        single = self.expansion_width is Expansion.ONE
        if single != (self.exclusion is Exclusion.NONE):
            raise ValueError(
                "exclusion NONE must be paired with expansion width ONE (and vice versa)"
            )
        if single and self.init is not Init.EMPTY:
            raise ValueError("single-candidate algorithms start from an empty support")

    @property
    def label(self) -> str:
        return f"{self.inclusion.name}-{self.exclusion.name}"


ALGORITHMS: dict[str, CriteriaSpec] = {
    "bomp": CriteriaSpec(Inclusion.IPC, Exclusion.NONE, Expansion.ONE, Init.EMPTY),
    "bompr": CriteriaSpec(Inclusion.SPC, Exclusion.NONE, Expansion.ONE, Init.EMPTY),
    "bcosamp": CriteriaSpec(Inclusion.IPC, Exclusion.RCC, Expansion.TWO_K, Init.EMPTY),
    "bsp": CriteriaSpec(Inclusion.IPC, Exclusion.RCC, Expansion.K, Init.TOP_K_BY_INCLUSION),
    "gpsp": CriteriaSpec(Inclusion.SPC, Exclusion.RMC, Expansion.K, Init.TOP_K_BY_INCLUSION),
}

ABLATION_COMBINATIONS: dict[str, CriteriaSpec] = {
    f"{inc.value}-{exc.value}": CriteriaSpec(inc, exc, Expansion.K, Init.TOP_K_BY_INCLUSION)
    for inc in (Inclusion.SPC, Inclusion.IPC)
    for exc in (Exclusion.RCC, Exclusion.RMC)
}


def resolve_criteria(algorithm) -> CriteriaSpec:
    """Accept a ``CriteriaSpec`` or a name such as ``"gpsp"`` or ``"spc-rcc"``."""
    if isinstance(algorithm, CriteriaSpec):
        return algorithm
    key = str(algorithm).lower()
    if key in ALGORITHMS:
        return ALGORITHMS[key]
    if key in ABLATION_COMBINATIONS:
        return ABLATION_COMBINATIONS[key]
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class IterationRecord:
    support_before: tuple[int, ...]
    expanded_support: tuple[int, ...]
    intermediate_coeffs: np.ndarray
    support_after: tuple[int, ...]
    residual_norm: float


@dataclass
class PursuitTrace:
    """Per-iteration record of a pursuit run.

    ``support_after`` of the final record is the shrunk pool *before* any
    revert, so the stalled iteration can still be inspected.
    """

    initial_support: tuple[int, ...]
    initial_residual_norm: float
    iterations: list[IterationRecord] = field(default_factory=list)

    @property
    def residual_norms(self) -> list[float]:
        return [self.initial_residual_norm] + [it.residual_norm for it in self.iterations]


@dataclass(frozen=True)
class PursuitOutcome:
    support: tuple[int, ...]
    coefficients: BlockSignal
    final_residual_norm: float
    iterations: int
    termination: Termination


# --- scores -----------------------------------------------------------------

def score_ipc(F_g, d) -> float:
    """Inner-product criterion ||F_g^T d||_2."""
    F_g = np.asarray(F_g, dtype=float)
    d = np.asarray(d, dtype=float)
    if F_g.shape[0] != d.shape[0]:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(F_g.T @ d))


def score_spc(F_g, d) -> float:
    """Subspace-projection criterion ||proj(d, F_g)||_2."""
    return float(np.linalg.norm(project(d, F_g)))


def score_rcc(x_p: BlockSignal, g: int) -> float:
    """Regression-coefficient criterion ||x_p[g]||_2."""
    return float(np.linalg.norm(x_p.block(g)))


def score_rmc(F_g, x_g) -> float:
    """Response-magnitude criterion ||F_g x_g||_2."""
    F_g = np.asarray(F_g, dtype=float)
    x_g = np.asarray(x_g, dtype=float)
    if F_g.shape[1] != x_g.shape[0]:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(F_g @ x_g))


def ipc_scores(A: BlockMatrix, d) -> np.ndarray:
    """IPC score of every block against ``d``."""
    c = A.entries.T @ np.asarray(d, dtype=float)
    return np.linalg.norm(c.reshape(A.n_blocks, A.block_size), axis=1)


def spc_scores(A: BlockMatrix, d) -> np.ndarray:
    """SPC score of every block against ``d`` (batched SVD of all blocks)."""
    d = np.asarray(d, dtype=float)
    U, s, _ = np.linalg.svd(A.stacked(), full_matrices=False)
    rank_tol = max(A.n_rows, A.block_size) * np.finfo(float).eps
    keep = s > rank_tol * s[:, :1]
    coords = np.einsum("gnm,n->gm", U, d) * keep
    return np.linalg.norm(coords, axis=1)


_INCLUSION = {Inclusion.IPC: ipc_scores, Inclusion.SPC: spc_scores}


def top_k(scores, k: int) -> tuple[int, ...]:
    """Indices of the ``k`` largest scores, sorted; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    if k < 0 or k > scores.size:
        raise ValueError(f"k={k} out of range for {scores.size} scores")
    order = np.argsort(-scores, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def _shrink_scores(A, exclusion, support, x_p):
    m = A.block_size
    blocks = x_p.reshape(len(support), m)
    if exclusion is Exclusion.RCC:
        return np.linalg.norm(blocks, axis=1)
    return np.array([np.linalg.norm(A.block(g) @ blocks[i]) for i, g in enumerate(support)])


# --- the loop -----------------------------------------------------------------

def _fit(A, y, T):
    if not T:
        return np.zeros(0), y.copy()
    B = block_submatrix(A, T)
    coef = least_squares(B, y)
    return coef, y - B @ coef


def _outcome(A, y, T, termination, iterations, fit=None):
    coef, r = _fit(A, y, T) if fit is None else fit
    signal = BlockSignal.from_support(A.n_blocks, A.block_size, T, coef)
    return PursuitOutcome(T, signal, float(np.linalg.norm(r)), iterations, termination)


def _validate(A: BlockMatrix, y, k: int, max_iter: int):
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("y must be nonempty")
    if y.size != A.n_rows:
        raise ValueError(f"y has length {y.size}, expected {A.n_rows}")
    if not 1 <= k <= A.n_blocks:
        raise ValueError(f"k={k} must satisfy 1 <= k <= G={A.n_blocks}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    return y


def _single_candidate(A, y, k, criteria):
    score = _INCLUSION[criteria.inclusion]
    tol = EXACT_FIT_RTOL * np.linalg.norm(y)
    T: tuple[int, ...] = ()
    r = y
    trace = PursuitTrace((), float(np.linalg.norm(y)))
    for _ in range(k):
        s = score(A, r)
        s[list(T)] = -np.inf
        g = int(np.argmax(s))
        T_new = tuple(sorted(T + (g,)))
        coef, r = _fit(A, y, T_new)
        trace.iterations.append(
            IterationRecord(T, T_new, coef, T_new, float(np.linalg.norm(r)))
        )
        T = T_new
    term = Termination.EXACT_FIT if np.linalg.norm(r) <= tol else Termination.MAX_ITER
    return _outcome(A, y, T, term, k), trace


def generic_pursuit(A: BlockMatrix, y, k: int, criteria, max_iter: int = DEFAULT_MAX_ITER):
    """Run the expand/shrink loop configured by ``criteria``.

    Returns ``(PursuitOutcome, PursuitTrace)``. For multi-candidate variants
    the loop stops as soon as the residual norm fails to decrease, reverting
    to the previous support; a (numerically) zero residual stops it at once.
    """
    criteria = resolve_criteria(criteria)
    y = _validate(A, y, k, max_iter)
    if criteria.expansion_width is Expansion.ONE:
        return _single_candidate(A, y, k, criteria)

    width = 2 * k if criteria.expansion_width is Expansion.TWO_K else k
    if width > A.n_blocks:
        raise ValueError(f"expansion width {width} exceeds G={A.n_blocks}")
    score = _INCLUSION[criteria.inclusion]
    tol = EXACT_FIT_RTOL * np.linalg.norm(y)

    T = top_k(score(A, y), k) if criteria.init is Init.TOP_K_BY_INCLUSION else ()
    fit_prev = _fit(A, y, T)
    r_prev = fit_prev[1]
    prev_norm = float(np.linalg.norm(r_prev))
    trace = PursuitTrace(T, prev_norm)
    if prev_norm <= tol:
        return _outcome(A, y, T, Termination.EXACT_FIT, 0, fit_prev), trace

    termination = Termination.MAX_ITER
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        expanded = tuple(sorted(set(T) | set(top_k(score(A, r_prev), width))))
        if expanded == T:
            # nothing new entered: the fit and the shrink reproduce T exactly
            trace.iterations.append(IterationRecord(T, T, fit_prev[0], T, prev_norm))
            termination = Termination.RESIDUAL_STALLED
            break
        x_p = least_squares(block_submatrix(A, expanded), y)
        keep = top_k(_shrink_scores(A, criteria.exclusion, expanded, x_p), k)
        T_new = tuple(expanded[i] for i in keep)
        fit = _fit(A, y, T_new)
        r = fit[1]
        norm = float(np.linalg.norm(r))
        trace.iterations.append(IterationRecord(T, expanded, x_p, T_new, norm))
        if norm >= prev_norm:
            termination = Termination.RESIDUAL_STALLED
            break
        T, r_prev, prev_norm, fit_prev = T_new, r, norm, fit
        if norm <= tol:
            termination = Termination.EXACT_FIT
            break
    return _outcome(A, y, T, termination, n_iter, fit_prev), trace


def gpsp(A, y, k, max_iter=DEFAULT_MAX_ITER):
    """Group Projected Subspace Pursuit: SPC expansion, RMC shrinking."""
    return generic_pursuit(A, y, k, ALGORITHMS["gpsp"], max_iter)


def bsp(A, y, k, max_iter=DEFAULT_MAX_ITER):
    """Block subspace pursuit: IPC expansion, RCC shrinking."""
    return generic_pursuit(A, y, k, ALGORITHMS["bsp"], max_iter)


def bcosamp(A, y, k, max_iter=DEFAULT_MAX_ITER):
    """Block CoSaMP: empty start, 2k IPC candidates per step, RCC shrinking."""
    if 2 * k > A.n_blocks:
        raise ValueError(f"BCoSaMP needs 2k <= G (k={k}, G={A.n_blocks})")
    return generic_pursuit(A, y, k, ALGORITHMS["bcosamp"], max_iter)


def bomp(A, y, k) -> PursuitOutcome:
    """Block OMP: k greedy IPC picks, never removes a block."""
    return generic_pursuit(A, y, k, ALGORITHMS["bomp"])[0]


def bompr(A, y, k) -> PursuitOutcome:
    """Block OMP by residual: picks the block leaving the smallest residual."""
    return generic_pursuit(A, y, k, ALGORITHMS["bompr"])[0]


def run_algorithm(algorithm, A, y, k, max_iter=DEFAULT_MAX_ITER):
    """Dispatch by name or ``CriteriaSpec``; returns ``(outcome, trace)``."""
    if str(algorithm).lower() == "bcosamp" and 2 * k > A.n_blocks:
        raise ValueError(f"BCoSaMP needs 2k <= G (k={k}, G={A.n_blocks})")
    return generic_pursuit(A, y, k, resolve_criteria(algorithm), max_iter)
