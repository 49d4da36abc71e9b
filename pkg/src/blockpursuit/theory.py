"""Block restricted isometry constants and GPSP convergence bounds.

Brute-force routines enumerate every block subset, so they are only meant
for small matrices (a few dozen columns). The closed-form constants are
functions of the block RIC ``delta`` of orders 1, k and 2k; the verifier
replays a GPSP trace and checks each per-iteration inequality against them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable

import numpy as np

from .blockmat import BlockMatrix, BlockSignal, block_submatrix
from .errors import CapacityError
from .pursuit import PursuitOutcome, PursuitTrace

__all__ = [
    "BricReport",
    "TheoremConstants",
    "InequalityCheck",
    "VerificationReport",
    "MAX_SUBSETS",
    "MAX_SPARK_COLUMNS",
    "bric_bruteforce",
    "bric_report",
    "spark_bruteforce",
    "block_uniqueness",
    "spark_uniqueness_bound",
    "constant_C",
    "constant_G",
    "constant_D",
    "constant_E",
    "constant_F",
    "constants_exact",
    "bisect_threshold",
    "verify_gpsp_theorems",
    "near_orthonormal_instance",
]

MAX_SUBSETS = 10**6
MAX_SPARK_COLUMNS = 20
# absolute slack when comparing the two sides of an inequality
CHECK_SLACK = 1e-9


def _n_subsets(G: int, k: int) -> int:
    n = math.comb(G, k)
    if n > MAX_SUBSETS:
        raise CapacityError(f"C({G},{k}) = {n} subsets exceeds the guard of {MAX_SUBSETS}")
    return n


# --- BRIC and spark -----------------------------------------------------------

def bric_bruteforce(A: BlockMatrix, k: int, chunk: int = 4096) -> float:
    """Exact block RIC of order ``k`` by enumerating all ``C(G, k)`` supports.

    ``delta_{M,k} = max_T max(sigma_max(A_T)^2 - 1, 1 - sigma_min(A_T)^2)``.
    Values above 1 are returned unclamped.
    """
    G = A.n_blocks
    if not 1 <= k <= G:
        raise ValueError(f"k={k} must lie in [1, {G}]")
    _n_subsets(G, k)
    stacked = A.stacked()  # (G, N, M)
    wide = k * A.block_size > A.n_rows
    worst = 0.0
    subsets = combinations(range(G), k)
    while True:
        batch = [next(subsets, None) for _ in range(chunk)]
        batch = np.array([b for b in batch if b is not None])
        if batch.size == 0:
            break
        sub = stacked[batch]  # (B, k, N, M)
        sub = sub.transpose(0, 2, 1, 3).reshape(len(batch), A.n_rows, -1)
        s = np.linalg.svd(sub, compute_uv=False)
        smax = s[:, 0]
        smin = np.zeros(len(batch)) if wide else s[:, -1]
        worst = max(worst, float(np.max(smax**2 - 1)), float(np.max(1 - smin**2)))
    return worst


@dataclass
class BricReport:
    block_size: int
    delta_by_k: dict[int, float]
    exhaustive: bool = True

    def delta(self, k: int) -> float:
        if k not in self.delta_by_k:
            raise ValueError(f"BRIC of order {k} was not computed")
        return self.delta_by_k[k]


def bric_report(A: BlockMatrix, orders) -> BricReport:
    """BRIC for each requested order (orders above G are clipped to G)."""
    deltas = {}
    for k in sorted(set(int(k) for k in orders)):
        deltas[k] = bric_bruteforce(A, min(k, A.n_blocks))
    return BricReport(A.block_size, deltas, exhaustive=True)


def spark_bruteforce(A, rank_tol: float | None = None) -> int:
    """Smallest number of linearly dependent columns of ``A``.

    A full-column-rank matrix gets ``rank + 1`` by convention.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n_cols = A.shape[1]
    if n_cols > MAX_SPARK_COLUMNS:
        raise CapacityError(f"spark enumeration limited to {MAX_SPARK_COLUMNS} columns")
    for m in range(1, n_cols + 1):
        for cols in combinations(range(n_cols), m):
            if np.linalg.matrix_rank(A[:, cols], tol=rank_tol) < m:
                return m
    return int(np.linalg.matrix_rank(A, tol=rank_tol)) + 1


def block_uniqueness(A: BlockMatrix, k: int) -> bool:
    """True iff no nonzero block 2k-sparse vector lies in ``ker(A)``."""
    order = min(2 * k, A.n_blocks)
    _n_subsets(A.n_blocks, order)
    need = order * A.block_size
    if need > A.n_rows:
        return False
    for T in combinations(range(A.n_blocks), order):
        if np.linalg.matrix_rank(block_submatrix(A, T)) < need:
            return False
    return True


def spark_uniqueness_bound(A, G: int) -> float:
    """Per-block sparsity below which any block-sparse solution is unique."""
    return (spark_bruteforce(A) - 1) / (2 * G)


# --- closed-form constants ----------------------------------------------------

def _check_delta(delta: float):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def constant_C(delta: float) -> float:
    """Exact-recovery constant; GPSP converges when it is below 1."""
    _check_delta(delta)
    d = delta
    return d * (1 + d) * (3 - d) * (-d * d + 2 * d + 1) / (1 - d) ** 6


def constant_G(delta: float) -> float:
    """Noise amplification factor of the final recovery error."""
    _check_delta(delta)
    return (1 + 2 * delta) / (delta * (1 - delta))


def constant_D(delta: float) -> float:
    _check_delta(delta)
    d = delta
    return 6 * math.sqrt(2) * d * d * (1 + d) * (2 - d) / (1 - d) ** 5


def constant_E(delta: float) -> float:
    _check_delta(delta)
    d = delta
    return (12 * d * (1 + d) ** 2 + (2 - d) * (1 - d) ** 3) / (1 - d) ** 5


def constant_F(delta: float) -> float:
    """Residual-decrease constant under noise; needs to be below 1."""
    _check_delta(delta)
    d = delta
    return d / (1 - d) + (
        math.sqrt(1 + d) * constant_D(d) + d * (math.sqrt(1 + d) * constant_E(d) + 2)
    ) / math.sqrt(1 - d)


@dataclass(frozen=True)
class TheoremConstants:
    beta_k: float
    mu_k: float
    rho_k: float
    C_Mk: float
    G_Mk: float
    D_Mk: float
    E_Mk: float
    F_Mk: float
    a_lemma9: float
    b_lemma9: float
    c_lemma10: float
    d_lemma10: float


def _at(f, delta, at_zero):
    return at_zero if delta == 0.0 else f(delta)


def constants_exact(delta_1: float, delta_k: float, delta_2k: float) -> TheoremConstants:
    """Every per-iteration constant, using the three BRIC orders separately."""
    d1, dk, d2 = float(delta_1), float(delta_k), float(delta_2k)
    if not 0.0 <= d1 <= dk <= d2 < 1.0:
        raise ValueError("need 0 <= delta_1 <= delta_k <= delta_2k < 1")
    denom = 1 - dk - d2
    if denom <= 0:
        raise ValueError("1 - delta_k - delta_2k must be positive")
    ratio1 = math.sqrt((1 + d1) / (1 - d1))
    beta = d2 * (1 - dk + d2) / (1 - dk) ** 2 * (math.sqrt(2 * (1 + d1) / (1 - d1)) + 1)
    mu = 1 + math.sqrt(2) * d2 / (1 - d2) * (1 + ratio1)
    rho = mu * beta * math.sqrt(1 - dk * dk) / denom
    a = (
        d2
        * (math.sqrt(2 / (1 - d1)) + 1 / math.sqrt(1 + d1))
        * (1 - dk + d2) / (1 - dk)
        * math.sqrt(1 + d1) / (1 - dk)
    )
    b = 2 * math.sqrt((1 + dk) / (1 - d1)) * math.sqrt(1 + d1) / (1 - dk)
    c = (1 + ratio1) * math.sqrt(2) * d2 / (1 - d2)
    d = (1 + ratio1) / math.sqrt(1 - d2)
    return TheoremConstants(
        beta_k=beta,
        mu_k=mu,
        rho_k=rho,
        C_Mk=_at(constant_C, d2, 0.0),
        G_Mk=_at(constant_G, d2, math.inf),
        D_Mk=_at(constant_D, d2, 0.0),
        E_Mk=_at(constant_E, d2, 2.0),
        F_Mk=_at(constant_F, d2, 0.0),
        a_lemma9=a,
        b_lemma9=b,
        c_lemma10=c,
        d_lemma10=d,
    )


def bisect_threshold(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Locate ``delta`` with ``f(delta) = 1`` for increasing ``f`` on ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if not (flo < 1.0 < fhi):
        raise ValueError(f"bracket invalid: f(lo)={flo}, f(hi)={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- trace verification -------------------------------------------------------

@dataclass(frozen=True)
class InequalityCheck:
    iteration: int
    name: str
    lhs: float
    rhs: float
    passed: bool
    applicable: bool = True


@dataclass
class VerificationReport:
    hypothesis_met: bool
    constants: TheoremConstants | None
    checks: list[InequalityCheck] = field(default_factory=list)
    note: str = ""

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.applicable)

    def failures(self) -> list[InequalityCheck]:
        return [c for c in self.checks if c.applicable and not c.passed]

    def to_dict(self) -> dict:
        return {
            "hypothesis_met": self.hypothesis_met,
            "all_passed": self.all_passed,
            "note": self.note,
            "constants": None if self.constants is None else vars(self.constants),
            "checks": [vars(c) for c in self.checks],
        }


def _missing(c_star: BlockSignal, true_support, selected) -> float:
    """||c*_{T* - selected}||_2."""
    return float(np.linalg.norm(c_star.restrict(set(true_support) - set(selected))))


def _leq(iteration, name, lhs, rhs, applicable=True):
    return InequalityCheck(iteration, name, float(lhs), float(rhs), lhs <= rhs + CHECK_SLACK, applicable)


def verify_gpsp_theorems(
    A: BlockMatrix,
    c_star: BlockSignal,
    trace: PursuitTrace,
    bric: BricReport,
    k: int,
    noise_norm: float | None = None,
    outcome: PursuitOutcome | None = None,
) -> VerificationReport:
    """Check the per-iteration bounds of a GPSP run against brute-forced BRICs.

    Noiseless (``noise_norm`` is None or 0): expansion, shrinking and residual
    contraction bounds. Noisy: the two intermediate lemma bounds, the combined
    missed-coefficient bound, the residual-decrease clause (only where its
    premise holds) and, given ``outcome``, the final error bound.
    """
    for order in (1, k, 2 * k):
        if min(order, A.n_blocks) not in bric.delta_by_k and order not in bric.delta_by_k:
            raise ValueError(f"BRIC of order {order} missing from report")

    def delta(order):
        return bric.delta_by_k.get(order, bric.delta_by_k.get(min(order, A.n_blocks)))

    d1, dk, d2 = delta(1), delta(k), delta(2 * k)
    try:
        consts = constants_exact(d1, dk, d2)
    except ValueError as exc:
        return VerificationReport(False, None, note=f"hypothesis unmet: {exc}")

    T_star = c_star.support()
    noisy = bool(noise_norm)
    e = float(noise_norm or 0.0)
    report = VerificationReport(True, consts)
    checks = report.checks
    prev_norm = trace.initial_residual_norm
    for l, it in enumerate(trace.iterations, start=1):
        miss_prev = _missing(c_star, T_star, it.support_before)
        miss_exp = _missing(c_star, T_star, it.expanded_support)
        miss_new = _missing(c_star, T_star, it.support_after)
        if not noisy:
            checks.append(_leq(l, "expansion_miss_bound", miss_exp, consts.beta_k * miss_prev))
            checks.append(_leq(l, "shrink_miss_bound", miss_new, consts.mu_k * miss_exp))
            checks.append(_leq(l, "residual_contraction", it.residual_norm, consts.rho_k * prev_norm))
        else:
            checks.append(_leq(l, "noisy_expansion_bound",
                               miss_exp, consts.a_lemma9 * miss_prev + consts.b_lemma9 * e))
            checks.append(_leq(l, "noisy_shrink_bound",
                               miss_new, consts.c_lemma10 * miss_exp + consts.d_lemma10 * e))
            checks.append(_leq(l, "noisy_miss_bound",
                               miss_new, consts.D_Mk * miss_prev + consts.E_Mk * e))
            premise = consts.F_Mk < 1 and e <= d2 * miss_prev
            checks.append(InequalityCheck(
                l, "noisy_residual_decrease", it.residual_norm, prev_norm,
                it.residual_norm < prev_norm, applicable=premise,
            ))
        prev_norm = it.residual_norm

    if outcome is not None:
        err = float(np.linalg.norm(c_star.coeffs - outcome.coefficients.coeffs))
        rhs = (1 + d2 - dk) / (1 - dk) * _missing(c_star, T_star, outcome.support) + e / math.sqrt(1 - dk)
        checks.append(_leq(len(trace.iterations), "final_error_bound", err, rhs))
        if not noisy and consts.C_Mk < 1:
            checks.append(InequalityCheck(
                len(trace.iterations), "exact_recovery", err, 0.0,
                set(outcome.support) >= set(T_star) and err <= 1e-8 * max(1.0, np.linalg.norm(c_star.coeffs)),
            ))
    return report


def near_orthonormal_instance(
    n_rows: int,
    n_blocks: int,
    block_size: int,
    order: int,
    target: tuple[float, float],
    rng: np.random.Generator,
    max_steps: int = 60,
) -> tuple[BlockMatrix, float]:
    """Perturbed orthonormal matrix whose brute-forced BRIC lands in ``target``.

    Builds ``Q + eps * R`` (``Q`` with orthonormal columns, ``R`` Gaussian) and
    bisects ``eps`` until ``delta_{M,order}`` falls in ``[target[0], target[1]]``.
    Returns the matrix and its BRIC.
    """
    n_cols = n_blocks * block_size
    if n_rows < n_cols:
        raise ValueError("need n_rows >= n_blocks * block_size")
    lo_t, hi_t = target
    Q, _ = np.linalg.qr(rng.standard_normal((n_rows, n_cols)))
    R = rng.standard_normal((n_rows, n_cols)) / math.sqrt(n_rows)
    lo, hi = 0.0, 1.0
    for _ in range(max_steps):
        eps = 0.5 * (lo + hi)
        A = BlockMatrix(Q + eps * R, n_blocks, block_size)
        d = bric_bruteforce(A, min(order, n_blocks))
        if d < lo_t:
            lo = eps
        elif d > hi_t:
            hi = eps
        else:
            return A, d
    raise RuntimeError("could not hit the target BRIC interval")
