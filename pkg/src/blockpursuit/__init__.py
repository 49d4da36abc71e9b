"""Greedy block-sparse recovery with pluggable inclusion and exclusion criteria."""

__version__ = "0.1.0"

from .blockmat import BlockMatrix, BlockSignal  # noqa: E402
from .pursuit import ALGORITHMS, ABLATION_COMBINATIONS, CriteriaSpec, generic_pursuit, gpsp, run_algorithm  # noqa: E402

__all__ = [
    "__version__",
    "BlockMatrix",
    "BlockSignal",
    "CriteriaSpec",
    "ALGORITHMS",
    "ABLATION_COMBINATIONS",
    "generic_pursuit",
    "gpsp",
    "run_algorithm",
]
