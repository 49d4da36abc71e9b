"""Open-uniform B-spline bases and their tensor products."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .burgers import T_DOMAIN, X_DOMAIN

__all__ = ["open_uniform_knots", "bspline_matrix", "BsplineBasis", "bspline_eval"]


def open_uniform_knots(n_basis: int, degree: int, lo: float, hi: float) -> np.ndarray:
    """Clamped knot vector giving ``n_basis`` functions of ``degree`` on ``[lo, hi]``."""
    if n_basis < degree + 1:
        raise ValueError("need at least degree + 1 basis functions")
    inner = np.linspace(lo, hi, n_basis - degree + 1)
    return np.concatenate([[lo] * degree, inner, [hi] * degree])


def bspline_matrix(knots: np.ndarray, degree: int, x) -> np.ndarray:
    """Values of all basis functions at ``x`` via the Cox-de Boor recursion.

    Returns an array of shape ``(len(x), len(knots) - degree - 1)``. The last
    nonempty span is closed on the right so the basis interpolates at ``hi``.
    """
    t = np.asarray(knots, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n_spans = len(t) - 1
    B = ((t[:-1] <= x[:, None]) & (x[:, None] < t[1:])).astype(float)
    last = np.flatnonzero(t[:-1] < t[1:])[-1]
    B[x == t[-1], :] = 0.0
    B[x == t[-1], last] = 1.0
    for p in range(1, degree + 1):
        nxt = np.zeros((x.size, n_spans - p))
        for i in range(n_spans - p):
            left = t[i + p] - t[i]
            right = t[i + p + 1] - t[i + 1]
            if left > 0:
                nxt[:, i] += (x - t[i]) / left * B[:, i]
            if right > 0:
                nxt[:, i] += (t[i + p + 1] - x) / right * B[:, i + 1]
        B = nxt
    return B


@dataclass(frozen=True)
class BsplineBasis:
    """Tensor-product basis ``B_i(x) B_j(t)``, flattened with ``i`` major."""

    order: int = 2
    n_space: int = 7
    n_time: int = 8
    x_domain: tuple[float, float] = X_DOMAIN
    t_domain: tuple[float, float] = T_DOMAIN

    @property
    def size(self) -> int:
        return self.n_space * self.n_time

    @property
    def space_knots(self) -> np.ndarray:
        return open_uniform_knots(self.n_space, self.order, *self.x_domain)

    @property
    def time_knots(self) -> np.ndarray:
        return open_uniform_knots(self.n_time, self.order, *self.t_domain)

    def _check(self, x, t):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        (x0, x1), (t0, t1) = self.x_domain, self.t_domain
        if np.any((x < x0) | (x > x1)) or np.any((t < t0) | (t > t1)):
            raise ValueError("evaluation point outside the basis domain")
        return x, t

    def space_values(self, x) -> np.ndarray:
        x, _ = self._check(x, self.t_domain[0])
        return bspline_matrix(self.space_knots, self.order, x)

    def time_values(self, t) -> np.ndarray:
        _, t = self._check(self.x_domain[0], t)
        return bspline_matrix(self.time_knots, self.order, t)

    def matrix(self, x, t) -> np.ndarray:
        """Basis values at paired points ``(x[n], t[n])``; shape ``(n, 56)``."""
        x, t = self._check(x, t)
        if x.shape != t.shape:
            raise ValueError("x and t must have the same shape")
        bx = bspline_matrix(self.space_knots, self.order, x)
        bt = bspline_matrix(self.time_knots, self.order, t)
        return (bx[:, :, None] * bt[:, None, :]).reshape(x.size, -1)


def bspline_eval(basis: BsplineBasis, x: float, t: float) -> np.ndarray:
    """All tensor-product basis values at a single point."""
    return basis.matrix([x], [t])[0]
