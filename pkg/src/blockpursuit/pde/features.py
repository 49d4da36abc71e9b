"""Candidate differential-operator features for PDE identification."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .burgers import PdeGrid, spectral_derivative

__all__ = ["MAX_DERIVATIVE", "MAX_FACTORS", "FeatureTerm", "enumerate_dictionary", "evaluate_features"]

MAX_DERIVATIVE = 4
MAX_FACTORS = 3


def _factor_name(order: int) -> str:
    return "u" if order == 0 else "u_" + "x" * order


@dataclass(frozen=True)
class FeatureTerm:
    """Product of derivatives of ``u``; ``orders`` is a sorted multiset, e.g. (0, 1) = u*u_x."""

    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(sorted(int(o) for o in self.orders))
        if not 1 <= len(orders) <= MAX_FACTORS:
            raise ValueError(f"a term has 1..{MAX_FACTORS} factors")
        if orders[0] < 0 or orders[-1] > MAX_DERIVATIVE:
            raise ValueError(f"derivative orders must lie in 0..{MAX_DERIVATIVE}")
        object.__setattr__(self, "orders", orders)

    @property
    def name(self) -> str:
        parts = []
        for order, count in sorted(Counter(self.orders).items()):
            f = _factor_name(order)
            parts.append(f if count == 1 else f"{f}^{count}")
        return "*".join(parts)

    @classmethod
    def parse(cls, name: str) -> "FeatureTerm":
        orders = []
        for part in name.replace(" ", "").split("*"):
            base, _, power = part.partition("^")
            order = 0 if base == "u" else len(base.split("_", 1)[1])
            orders += [order] * (int(power) if power else 1)
        return cls(tuple(orders))

    def sort_key(self):
        return len(self.orders), self.orders

    def __lt__(self, other: "FeatureTerm") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self):
        return self.name


def enumerate_dictionary() -> list[FeatureTerm]:
    """All 55 terms: 1 to 3 factors drawn from u, u_x, ..., u_xxxx."""
    return [
        FeatureTerm(combo)
        for size in range(1, MAX_FACTORS + 1)
        for combo in combinations_with_replacement(range(MAX_DERIVATIVE + 1), size)
    ]


def evaluate_features(grid: PdeGrid, terms=None) -> tuple[np.ndarray, np.ndarray]:
    """Feature values and ``u_t`` on the (downsampled) grid.

    Spatial derivatives are spectral and taken on ``grid.u_fine`` when it is
    available, then downsampled. ``u_t`` uses centered differences in time,
    one-sided at the two end samples.

    Returns ``(values, u_t)`` with ``values.shape == (len(terms), nx, nt)``.
    """
    terms = enumerate_dictionary() if terms is None else list(terms)
    if grid.u_fine is not None:
        source, stride = grid.u_fine, grid.stride
    else:
        source, stride = grid.u, 1
    length = source.shape[0] * grid.x_step / stride
    derivs = np.stack([
        spectral_derivative(source, order, length=length, axis=0)[::stride]
        for order in range(MAX_DERIVATIVE + 1)
    ])
    values = np.empty((len(terms),) + grid.u.shape)
    for i, term in enumerate(terms):
        values[i] = np.prod(derivs[list(term.orders)], axis=0)
    u_t = np.gradient(grid.u, grid.t_step, axis=1, edge_order=1)
    return values, u_t
