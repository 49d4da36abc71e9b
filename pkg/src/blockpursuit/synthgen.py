"""Random block ensembles and success-rate sweeps.

All randomness comes from Philox streams keyed by
``(master_seed, trial_index, stream_tag)``, so any single trial can be
regenerated in isolation and sweep results do not depend on how trials are
scheduled across workers.
"""
from __future__ import annotations

import enum
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .blockmat import BlockMatrix, BlockSignal, column_normalize
from .pursuit import resolve_criteria, run_algorithm

__all__ = [
    "Family",
    "EnsembleSpec",
    "TrialResult",
    "SweepCell",
    "SweepResult",
    "rng_stream",
    "gen_hetero_gaussian",
    "gen_poisson_blocks",
    "gen_bernoulli_blocks",
    "gen_matrix",
    "gen_signal",
    "add_noise",
    "trial_key",
    "run_trial",
    "run_sweep",
]

# stream tags
MATRIX, SIGNAL, NOISE = 1, 2, 3
POISSON_MEAN_CAP = 1e6


class Family(enum.Enum):
    HETERO_GAUSSIAN = "gaussian"
    POISSON = "poisson"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class EnsembleSpec:
    family: Family = Family.HETERO_GAUSSIAN
    n_rows: int = 400
    n_blocks: int = 200
    block_size: int = 5
    normalize_columns: bool = True
    master_seed: int = 0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_blocks < 1 or self.block_size < 1:
            raise ValueError("n_rows, n_blocks and block_size must be positive")
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))

    @property
    def sparsity_cap(self) -> int:
        """Largest sparsity tested: N / (2M)."""
        return self.n_rows // (2 * self.block_size)


def rng_stream(master_seed: int, trial_index: int, stream_tag: int) -> np.random.Generator:
    """Independent counter-based generator for one (seed, trial, stream)."""
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(trial_index), int(stream_tag)])
    return np.random.Generator(np.random.Philox(seq))


def gen_hetero_gaussian(spec: EnsembleSpec, trial_index: int) -> BlockMatrix:
    """Each block i.i.d. N(mu_g, sigma_g^2) with mu_g ~ N(1, 5^2), sigma_g = |N(1, 5^2)|."""
    rng = rng_stream(spec.master_seed, trial_index, MATRIX)
    G, M, N = spec.n_blocks, spec.block_size, spec.n_rows
    mu = rng.normal(1.0, 5.0, size=G)
    sigma = np.abs(rng.normal(1.0, 5.0, size=G))
    while np.any(sigma == 0):
        bad = sigma == 0
        sigma[bad] = np.abs(rng.normal(1.0, 5.0, size=int(bad.sum())))
    z = rng.standard_normal((N, G, M))
    entries = (mu[None, :, None] + sigma[None, :, None] * z).reshape(N, G * M)
    return BlockMatrix(entries, G, M)


def gen_poisson_blocks(spec: EnsembleSpec, trial_index: int) -> BlockMatrix:
    """Poisson entries; each block's mean is the square of a N(5, 20^2) draw."""
    rng = rng_stream(spec.master_seed, trial_index, MATRIX)
    G, M, N = spec.n_blocks, spec.block_size, spec.n_rows
    lam = rng.normal(5.0, 20.0, size=G) ** 2
    while np.any(lam > POISSON_MEAN_CAP):
        bad = lam > POISSON_MEAN_CAP
        lam[bad] = rng.normal(5.0, 20.0, size=int(bad.sum())) ** 2
    entries = rng.poisson(np.broadcast_to(lam[None, :, None], (N, G, M))).astype(float)
    return BlockMatrix(entries.reshape(N, G * M), G, M)


def gen_bernoulli_blocks(spec: EnsembleSpec, trial_index: int) -> BlockMatrix:
    """0/1 entries; each block's success probability is Uniform[0, 1]."""
    rng = rng_stream(spec.master_seed, trial_index, MATRIX)
    G, M, N = spec.n_blocks, spec.block_size, spec.n_rows
    p = rng.uniform(0.0, 1.0, size=G)
    entries = (rng.uniform(size=(N, G, M)) < p[None, :, None]).astype(float)
    return BlockMatrix(entries.reshape(N, G * M), G, M)


_GENERATORS = {
    Family.HETERO_GAUSSIAN: gen_hetero_gaussian,
    Family.POISSON: gen_poisson_blocks,
    Family.BERNOULLI: gen_bernoulli_blocks,
}


def gen_matrix(spec: EnsembleSpec, trial_index: int) -> BlockMatrix:
    A = _GENERATORS[spec.family](spec, trial_index)
    if spec.normalize_columns:
        A, _ = column_normalize(A)
    return A


def gen_signal(G: int, M: int, k: int, trial_index: int, master_seed: int) -> BlockSignal:
    """Blocks ``0..k-1`` active, entries i.i.d. N(mu_c, 1) with mu_c ~ N(1, 5^2)."""
    if not 0 <= k <= G:
        raise ValueError(f"k={k} must lie in [0, {G}]")
    rng = rng_stream(master_seed, trial_index, SIGNAL)
    mu_c = rng.normal(1.0, 5.0)
    values = rng.normal(mu_c, 1.0, size=k * M)
    c = np.zeros(G * M)
    c[: k * M] = values
    return BlockSignal(c, M)


def add_noise(y, sigma: float, trial_index: int, master_seed: int) -> np.ndarray:
    """``y`` plus i.i.d. N(0, sigma^2) noise."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    y = np.asarray(y, dtype=float)
    if sigma == 0:
        return y.copy()
    rng = rng_stream(master_seed, trial_index, NOISE)
    return y + rng.normal(0.0, sigma, size=y.shape)


def trial_key(k: int, trial: int) -> int:
    """Trial index used for RNG keying; distinct per (sparsity, repetition)."""
    return int(k) * 1_000_003 + int(trial)


@dataclass(frozen=True)
class TrialResult:
    algorithm: str
    sparsity: int
    trial: int
    success: bool
    residual_norm: float
    wall_time: float


@dataclass
class SweepCell:
    trials: int = 0
    successes: int = 0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class SweepResult:
    spec: EnsembleSpec
    noise_sigma: float
    algorithms: list[str]
    sparsities: list[int]
    cells: dict[tuple[str, int], SweepCell] = field(default_factory=dict)

    def rate(self, algorithm: str, k: int) -> float:
        return self.cells[(algorithm, k)].success_rate

    def rates(self, algorithm: str) -> list[float]:
        return [self.rate(algorithm, k) for k in self.sparsities]

    def mean_rate(self, algorithm: str, sparsities=None) -> float:
        ks = self.sparsities if sparsities is None else sparsities
        return float(np.mean([self.rate(algorithm, k) for k in ks]))


def _algorithm_name(algorithm) -> str:
    if isinstance(algorithm, str):
        resolve_criteria(algorithm)
        return algorithm.lower()
    return resolve_criteria(algorithm).label.lower()


def run_trial(spec: EnsembleSpec, algorithms, k: int, trial: int, noise_sigma: float = 0.0):
    """Generate one instance and run every algorithm on it."""
    idx = trial_key(k, trial)
    A = gen_matrix(spec, idx)
    c = gen_signal(spec.n_blocks, spec.block_size, k, idx, spec.master_seed)
    y = add_noise(A.entries @ c.coeffs, noise_sigma, idx, spec.master_seed)
    truth = set(c.support())
    out = []
    for alg in algorithms:
        t0 = time.perf_counter()
        outcome, _ = run_algorithm(alg, A, y, k)
        elapsed = time.perf_counter() - t0
        out.append(TrialResult(
            _algorithm_name(alg), k, trial, set(outcome.support) == truth,
            outcome.final_residual_norm, elapsed,
        ))
    return out


def _trial_task(args):
    return run_trial(*args)


def run_sweep(
    spec: EnsembleSpec,
    algorithms,
    sparsities,
    trials_per_cell: int,
    noise_sigma: float = 0.0,
    jobs: int = 1,
    progress=None,
) -> SweepResult:
    """Success rate of each algorithm at each sparsity over independent trials.

    ``jobs > 1`` distributes trials over worker processes; the result is
    identical to the serial run.
    """
    sparsities = [int(k) for k in sparsities]
    if trials_per_cell < 1:
        raise ValueError("trials_per_cell must be >= 1")
    cap = spec.sparsity_cap
    for k in sparsities:
        if not 1 <= k <= min(cap, spec.n_blocks):
            raise ValueError(f"sparsity {k} outside [1, N/(2M) = {cap}]")
    names = [_algorithm_name(a) for a in algorithms]
    result = SweepResult(spec, float(noise_sigma), names, sparsities)
    for name in names:
        for k in sparsities:
            result.cells[(name, k)] = SweepCell()

    tasks = [(spec, list(algorithms), k, t, noise_sigma) for k in sparsities for t in range(trials_per_cell)]
    if jobs == 0:
        jobs = os.cpu_count() or 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
            _collect(result, batches, progress, len(tasks))
    else:
        _collect(result, map(_trial_task, tasks), progress, len(tasks))
    return result


def _collect(result, batches, progress, total):
    for done, batch in enumerate(batches, start=1):
        for r in batch:
            cell = result.cells[(r.algorithm, r.sparsity)]
            cell.trials += 1
            cell.successes += int(r.success)
        if progress is not None:
            progress(done, total)
