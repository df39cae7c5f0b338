"""Heat kernel, Lamé semigroup and inhomogeneous Lamé solves as Fourier multipliers.

The Lamé system ``d_t u - lap u - kappa grad div u = 0`` diagonalizes under the
Helmholtz split: the solenoidal part diffuses with viscosity 1 and the gradient
part with viscosity ``1 + kappa``. On the grid the gradient-part rate is
``|k|^2 + kappa |k_d|^2`` (``k_d`` = derivative wavenumber), which equals
``(1 + kappa)|k|^2`` everywhere except on the Nyquist planes, where it is the
exact rate of the discrete operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import Grid3, check_finite, fft, gradient_projection, ifft


@dataclass(frozen=True)
class LameParams:
    kappa: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


def heat_kernel(nu: float, x, t: float) -> float | np.ndarray:
    """Free-space heat kernel (4 pi nu t)^(-3/2) exp(-|x|^2 / (4 nu t)).

    ``x`` may be a single point of shape (3,) or an array of points (..., 3).
    """
    if not nu > 0:
        raise ValueError(f"nu must be > 0, got {nu}")
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x**2, axis=-1)
    return (4.0 * np.pi * nu * t) ** -1.5 * np.exp(-r2 / (4.0 * nu * t))


def decay_rates(grid: Grid3, params: LameParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode decay rates (solenoidal, gradient) of the Lamé operator."""
    return grid.k2, grid.k2 + params.kappa * grid.kd2


def apply_split(grid: Grid3, uh: np.ndarray, sol: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Multiply the solenoidal part of ``uh`` by ``sol`` and the gradient part by ``grad``."""
    return sol * uh + (grad - sol) * gradient_projection(grid, uh)


def lame_multiplier(grid: Grid3, t: float, params: LameParams) -> tuple[np.ndarray, np.ndarray]:
    rs, rg = decay_rates(grid, params)
    return np.exp(-rs * t), np.exp(-rg * t)


def lame_apply_spectral(grid: Grid3, uh: np.ndarray, t: float, params: LameParams) -> np.ndarray:
    if t == 0:
        return uh.copy()
    sol, grad = lame_multiplier(grid, t, params)
    return apply_split(grid, uh, sol, grad)


def lame_apply(grid: Grid3, u0: np.ndarray, t: float, params: LameParams) -> np.ndarray:
    """S_kappa(t) u0 = e^{t lap} u0_sol + e^{(1+kappa) t lap} u0_grad; t = 0 returns u0."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    check_finite(u0)
    if t == 0:
        return np.array(u0, dtype=float, copy=True)
    return ifft(lame_apply_spectral(grid, fft(u0), t, params))


def simpson_weights(m: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``m`` equispaced samples.

    An even sample count finishes with Simpson's 3/8 rule on the last three intervals.
    """
    if m < 3:
        raise ValueError(f"need at least 3 samples, got {m}")
    w = np.zeros(m)
    intervals = m - 1
    simpson_end = intervals if intervals % 2 == 0 else intervals - 3
    if simpson_end > 0:
        w[0:simpson_end + 1:2] += 2.0
        w[1:simpson_end:2] += 4.0
        w[0] -= 1.0
        w[simpson_end] -= 1.0
        w[: simpson_end + 1] *= h / 3.0
    if simpson_end != intervals:
        w[simpson_end:] += np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 * h / 8.0)
    return w


def _duhamel(grid: Grid3, forcing_hat, t: float, rates: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    m = len(forcing_hat)
    if m < 3:
        raise ValueError(f"need at least 3 time samples, got {m}")
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t}")
    h = t / (m - 1)
    weights = simpson_weights(m, h)
    rs, rg = rates
    acc = np.zeros((3, *grid.shape), dtype=complex)
    for j, (w, gh) in enumerate(zip(weights, forcing_hat)):
        lag = t - j * h
        acc += w * apply_split(grid, gh, np.exp(-rs * lag), np.exp(-rg * lag))
    return acc


def lame_solve_force(grid: Grid3, f: Sequence[np.ndarray], t: float, params: LameParams) -> np.ndarray:
    """Solve d_t v - lap v - kappa grad div v = f, v(0) = 0, and return v(t).

    ``f`` holds forcing samples at ``s_j = j t / (m - 1)``; the Duhamel integral is
    taken with composite Simpson in time and the exact multiplier in space.
    """
    fh = [fft(check_finite(fj)) for fj in f]
    return ifft(_duhamel(grid, fh, t, decay_rates(grid, params)))


def tensor_divergence_hat(grid: Grid3, Fh: np.ndarray) -> np.ndarray:
    """(div F)_i = sum_j d_j F_ij for spectral tensor coefficients of shape (3, 3, n, n, n)."""
    return 1j * np.einsum("jxyz,ijxyz->ixyz", grid.kvec, Fh)


def lame_solve_divforce(grid: Grid3, F: Sequence[np.ndarray], t: float, params: LameParams) -> np.ndarray:
    """Solve d_t w - lap w - kappa grad div w = div F, w(0) = 0, and return w(t)."""
    gh = [tensor_divergence_hat(grid, fft(check_finite(Fj))) for Fj in F]
    return ifft(_duhamel(grid, gh, t, decay_rates(grid, params)))


def lame_solve_divforce_split(
    grid: Grid3, F: Sequence[np.ndarray], t: float, params: LameParams
) -> tuple[np.ndarray, np.ndarray]:
    """Two-heat-solve construction of the div F problem: returns (w1, w2).

    ``lap q = div div F``; ``w1`` solves the heat equation with viscosity
    ``1 + kappa`` forced by ``grad q`` and ``w2`` the unit-viscosity heat equation
    forced by the divergence-free remainder ``div F - grad q``. Their sum solves
    the Lamé problem for band-limited data (no Nyquist content).
    """
    k2 = grid.k2
    grad_q, rest = [], []
    for Fj in F:
        gh = tensor_divergence_hat(grid, fft(check_finite(Fj)))
        # -|k|^2 q_hat = (div div F)_hat
        divdiv = 1j * np.sum(grid.kvec * gh, axis=0)
        qh = -divdiv * grid.inv_kd2
        gq = 1j * grid.kvec * qh
        grad_q.append(gq)
        rest.append(gh - gq)
    nu = 1.0 + params.kappa
    w1 = _duhamel(grid, grad_q, t, (nu * k2, nu * k2))
    w2 = _duhamel(grid, rest, t, (k2, k2))
    return ifft(w1), ifft(w2)
