"""Pseudo-spectral solver for the varying-coefficient viscous Burgers equation

    u_t = a(x, t) u u_x + b u_xx,   x in [-1, 1) periodic,  t in [0, 0.3]

with ``a(x, t) = 0.8 + 0.2 phi(t) cos(pi x)``, ``phi(t) = 0.5 + 0.5 tanh(10 (t - 0.15))``
and ``b = 0.02``. Spatial derivatives are spectral, time stepping is classical
RK4, and the nonlinear term is de-aliased by 3/2 zero-padding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverDivergenceError

__all__ = [
    "PdeGrid",
    "DIFFUSION",
    "X_DOMAIN",
    "T_DOMAIN",
    "coefficient_phi",
    "coefficient_a",
    "initial_condition",
    "spectral_derivative",
    "solve_burgers",
]

DIFFUSION = 0.02
X_DOMAIN = (-1.0, 1.0)
T_DOMAIN = (0.0, 0.3)
DIVERGENCE_LIMIT = 1e3


def coefficient_phi(t):
    return 0.5 + 0.5 * np.tanh(10.0 * (np.asarray(t, dtype=float) - 0.15))


def coefficient_a(x, t):
    x = np.asarray(x, dtype=float)
    return 0.8 + 0.2 * coefficient_phi(t) * np.cos(np.pi * x)


def initial_condition(x):
    x = np.asarray(x, dtype=float)
    return np.sin(6 * np.pi * (x + 0.1)) + 1.5 * np.sin(2 * np.pi * (x + 0.1)) * np.cos(2 * np.pi * (x - 0.5))


def _wavenumbers(n: int, length: float) -> np.ndarray:
    return 2 * np.pi / length * np.fft.fftfreq(n, d=1.0 / n)


def spectral_derivative(u, order: int, length: float = 2.0, axis: int = 0) -> np.ndarray:
    """``order``-th derivative of periodic samples ``u`` along ``axis``."""
    u = np.asarray(u, dtype=float)
    if order == 0:
        return u.copy()
    n = u.shape[axis]
    k = _wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 and n % 2 == 0:
        mult[n // 2] = 0.0  # Nyquist mode has no odd derivative
    shape = [1] * u.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(np.fft.fft(u, axis=axis) * mult.reshape(shape), axis=axis))


@dataclass(frozen=True, eq=False)
class PdeGrid:
    """Solution samples ``u[i, j] = u(x[i], t[j])``.

    ``u_fine`` keeps the full spatial resolution at the same time samples so
    derivatives can be taken before spatial downsampling.
    """

    u: np.ndarray
    x: np.ndarray
    t: np.ndarray
    x_step: float
    t_step: float
    u_fine: np.ndarray | None = None
    x_fine: np.ndarray | None = None

    @property
    def stride(self) -> int:
        if self.u_fine is None:
            return 1
        return self.u_fine.shape[0] // self.u.shape[0]


def solve_burgers(
    fine_x_step: float = 0.02,
    fine_t_step: float = 3e-4,
    x_stride: int = 2,
    t_stride: int = 10,
    n_samples: int = 100,
) -> PdeGrid:
    """Integrate the equation and return the downsampled grid.

    With the defaults the fine grid has 100 points and 1000 steps of 3e-4,
    and the returned grid is 50 x 100 with steps 0.04 and 3e-3.
    """
    length = X_DOMAIN[1] - X_DOMAIN[0]
    n = int(round(length / fine_x_step))
    x = X_DOMAIN[0] + fine_x_step * np.arange(n)
    k = _wavenumbers(n, length)
    ik = 1j * k
    k2 = k * k
    dt = fine_t_step
    n_pad = 3 * n // 2
    x_pad = X_DOMAIN[0] + length / n_pad * np.arange(n_pad)
    half = n // 2

    def pad(v_hat):
        out = np.zeros(n_pad, dtype=complex)
        out[:half] = v_hat[:half]
        out[-half:] = v_hat[-half:]
        return out * (n_pad / n)

    def truncate(v_hat):
        out = np.zeros(n, dtype=complex)
        out[:half] = v_hat[:half]
        out[-half:] = v_hat[-half:]
        return out * (n / n_pad)

    def rhs(u_hat, t):
        u = np.real(np.fft.ifft(pad(u_hat)))
        ux = np.real(np.fft.ifft(pad(ik * u_hat)))
        nl = truncate(np.fft.fft(coefficient_a(x_pad, t) * u * ux))
        return nl - DIFFUSION * k2 * u_hat

    n_steps = t_stride * (n_samples - 1)
    snapshots = np.empty((n, n_samples))
    u_hat = np.fft.fft(initial_condition(x))
    snapshots[:, 0] = np.real(np.fft.ifft(u_hat))
    for step in range(1, n_steps + 1):
        t = (step - 1) * dt
        k1 = rhs(u_hat, t)
        k2_ = rhs(u_hat + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(u_hat + 0.5 * dt * k2_, t + 0.5 * dt)
        k4 = rhs(u_hat + dt * k3, t + dt)
        u_hat = u_hat + dt / 6.0 * (k1 + 2 * k2_ + 2 * k3 + k4)
        if step % t_stride == 0:
            u = np.real(np.fft.ifft(u_hat))
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > DIVERGENCE_LIMIT:
                raise SolverDivergenceError(f"solution diverged at t={step * dt:.4g}")
            snapshots[:, step // t_stride] = u
    snapshots[:, 0] = initial_condition(x)
    t_samples = dt * t_stride * np.arange(n_samples)
    return PdeGrid(
        u=snapshots[::x_stride].copy(),
        x=x[::x_stride].copy(),
        t=t_samples,
        x_step=fine_x_step * x_stride,
        t_step=dt * t_stride,
        u_fine=snapshots,
        x_fine=x,
    )
