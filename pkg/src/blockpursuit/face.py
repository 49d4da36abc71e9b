"""Face recognition as block-sparse recovery with block sparsity one.

Each subject contributes one block made of its (dimension-reduced) training
images; a test image is assigned to the subject whose block a pursuit
algorithm selects.
"""
from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .blockmat import BlockMatrix, column_normalize
from .errors import DataError
from .pursuit import run_algorithm

__all__ = [
    "YALEB_SHAPE",
    "FaceDataset",
    "ReductionMethod",
    "ReductionSpec",
    "load_yaleb",
    "split_train_test",
    "reduce",
    "build_dictionary",
    "classify_face",
    "evaluate_accuracy",
    "write_fixture_dataset",
]

log = logging.getLogger(__name__)

YALEB_SHAPE = (192, 168)
_NAME = re.compile(r"^yaleB(\d+)_.*\.pgm$", re.IGNORECASE)


@dataclass(frozen=True, eq=False)
class FaceDataset:
    images: np.ndarray  # (n_images, n_pixels), intensities in [0, 1]
    labels: np.ndarray  # subject id per image, 0-based
    files: tuple[str, ...] = ()
    skipped: int = 0

    @property
    def n_subjects(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def __len__(self):
        return self.labels.size


class ReductionMethod(enum.Enum):
    PCA = "pca"
    RANDOM_PROJ = "randproj"
    DOWNSAMPLE = "downsample"


@dataclass(frozen=True)
class ReductionSpec:
    method: ReductionMethod = ReductionMethod.PCA
    target_dim: int = 132
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.method, ReductionMethod):
            object.__setattr__(self, "method", ReductionMethod(self.method))
        if self.target_dim < 1:
            raise ValueError("target_dim must be positive")


def load_yaleb(root, shape: tuple[int, int] | None = YALEB_SHAPE) -> FaceDataset:
    """Read ``yaleB<NN>_*.pgm`` files below ``root``.

    Subject numbers are mapped to consecutive ids in sorted order. Files that
    cannot be decoded, are not 8-bit grayscale, or do not match ``shape``
    (the first readable image's shape when ``shape`` is None) are skipped.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    paths = sorted((p for p in root.rglob("*") if _NAME.match(p.name)), key=lambda p: p.name)
    images, numbers, files = [], [], []
    skipped = 0
    for path in paths:
        try:
            with Image.open(path) as img:
                img.load()
                if img.mode != "L":
                    raise OSError(f"unexpected mode {img.mode}")
                arr = np.asarray(img, dtype=float) / 255.0
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            skipped += 1
            continue
        if shape is None:
            shape = arr.shape
        if arr.shape != tuple(shape):
            log.warning("skipping %s: shape %s != %s", path.name, arr.shape, tuple(shape))
            skipped += 1
            continue
        images.append(arr.ravel())
        numbers.append(int(_NAME.match(path.name).group(1)))
        files.append(path.name)
    if not images:
        raise DataError(f"no readable images under {root}")
    ids = {n: i for i, n in enumerate(sorted(set(numbers)))}
    labels = np.array([ids[n] for n in numbers])
    if skipped:
        log.warning("%d file(s) skipped", skipped)
    return FaceDataset(np.vstack(images), labels, tuple(files), skipped)


def split_train_test(ds: FaceDataset, m_train: int, seed: int):
    """Per-subject random split with exactly ``m_train`` training images each.

    Returns ``(train, test)`` datasets; training images are grouped by subject.
    """
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for s in range(ds.n_subjects):
        idx = np.flatnonzero(ds.labels == s)
        if idx.size < m_train:
            raise ValueError(f"subject {s} has {idx.size} images, fewer than {m_train}")
        chosen = np.sort(rng.choice(idx, size=m_train, replace=False))
        train_idx.extend(chosen)
        test_idx.extend(np.setdiff1d(idx, chosen))
    tr, te = np.array(train_idx, dtype=int), np.array(sorted(test_idx), dtype=int)
    return _subset(ds, tr), _subset(ds, te)


def _subset(ds, idx):
    files = tuple(ds.files[i] for i in idx) if ds.files else ()
    return FaceDataset(ds.images[idx], ds.labels[idx], files)


def reduce(train: FaceDataset, test: FaceDataset, spec: ReductionSpec):
    """Map both sets to ``spec.target_dim`` dimensions; returns ``(train_r, test_r)``.

    Outputs are ``(n_images, D)``. PCA directions come from the centred
    training data only; images are projected without centring so that linear
    relations between images of one subject survive the reduction.
    """
    D = spec.target_dim
    n_pixels = train.images.shape[1]
    if D > n_pixels:
        raise ValueError(f"target_dim {D} exceeds the {n_pixels} pixels")
    if spec.method is ReductionMethod.PCA:
        W = _pca_components(train.images, D)
        return train.images @ W, test.images @ W
    rng = np.random.default_rng(spec.seed)
    if spec.method is ReductionMethod.RANDOM_PROJ:
        P = rng.normal(0.0, np.sqrt(1.0 / D), size=(n_pixels, D))
        return train.images @ P, test.images @ P
    idx = np.sort(rng.choice(n_pixels, size=D, replace=False))
    return train.images[:, idx], test.images[:, idx]


def _pca_components(X: np.ndarray, D: int) -> np.ndarray:
    """Leading ``D`` principal directions as columns, zero-padded if rank < D."""
    Xc = X - X.mean(axis=0)
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    tol = max(Xc.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = min(D, int(np.count_nonzero(s > tol)))
    W = np.zeros((X.shape[1], D))
    W[:, :r] = Vt[:r].T
    if r < D:
        log.warning("PCA: only %d components available, zero-padding to %d", r, D)
    return W


def build_dictionary(train_reduced: np.ndarray, labels: np.ndarray) -> BlockMatrix:
    """One block per subject (equal block sizes), columns normalized."""
    labels = np.asarray(labels)
    subjects = np.unique(labels)
    counts = {int(np.sum(labels == s)) for s in subjects}
    if len(counts) != 1:
        raise ValueError("every subject needs the same number of training images")
    blocks = [train_reduced[labels == s].T for s in subjects]
    A, _ = column_normalize(BlockMatrix.from_blocks(blocks))
    return A


def classify_face(dictionary: BlockMatrix, b, algorithm="gpsp") -> int:
    """Subject id (block index) selected at block sparsity one."""
    outcome, _ = run_algorithm(algorithm, dictionary, b, 1)
    return int(outcome.support[0])


def evaluate_accuracy(ds: FaceDataset, m_train: int, spec: ReductionSpec, algorithms, seed: int):
    """Accuracy of each algorithm on one random split; returns ``{name: accuracy}``."""
    train, test = split_train_test(ds, m_train, seed)
    tr, te = reduce(train, test, spec)
    A = build_dictionary(tr, train.labels)
    out = {}
    for alg in algorithms:
        pred = np.array([classify_face(A, b, alg) for b in te])
        out[str(alg)] = float(np.mean(pred == test.labels)) if len(test) else float("nan")
    return out


def write_fixture_dataset(root, n_subjects: int = 3, per_subject: int = 6,
                          shape: tuple[int, int] = (16, 12), subspace_dim: int = 2, seed: int = 0):
    """Write PGM files whose subjects live on disjoint pixel sets.

    Each subject's images are nonnegative combinations of ``subspace_dim``
    patterns supported on that subject's own pixels, so the subject
    subspaces are mutually orthogonal.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_pixels = shape[0] * shape[1]
    owner = np.arange(n_pixels) % n_subjects
    paths = []
    for s in range(n_subjects):
        mask = owner == s
        patterns = rng.uniform(0.2, 1.0, size=(subspace_dim, n_pixels)) * mask
        for j in range(per_subject):
            w = rng.uniform(0.1, 1.0, size=subspace_dim)
            img = w @ patterns
            img = np.round(255 * img / img.max()).astype(np.uint8).reshape(shape)
            path = root / f"yaleB{s + 1:02d}_P00A{j:03d}.pgm"
            Image.fromarray(img, mode="L").save(path)
            paths.append(path)
    return paths
