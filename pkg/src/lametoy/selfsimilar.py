"""Scaling map, self-similarity defect and the stationary profile residual.

A self-similar solution has the form u(x, t) = t^(-1/2) U(x / sqrt(t)); the
profile U = u(., 1) then satisfies

    -lap U - kappa grad div U + N(U) - (x/2).grad U - U/2 = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .evolution import Trajectory
from .models import ModelKind, nonlinearity
from .semigroup import LameParams
from .spectral import Grid3, check_finite, fft, ifft, interpolate, lp_norm


def rescale(grid: Grid3, u: np.ndarray, lam: float, grid_out: Grid3 | None = None) -> np.ndarray:
    """x -> lam * u(lam * x) on ``grid_out`` by trigonometric interpolation of ``u``."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    grid_out = grid_out or grid
    pts = lam * grid_out.axis
    half = 0.5 * grid.box_length
    if np.max(np.abs(pts)) > half * (1 + 1e-12):
        raise ValueError(
            f"scaled points reach |x| = {np.max(np.abs(pts)):.6g}, outside the source box [-{half}, {half})"
        )
    if lam == 1.0 and grid_out == grid:
        return np.array(u, dtype=float, copy=True)
    return lam * interpolate(grid, u, (pts, pts, pts))


def annulus_mask(grid: Grid3, r_min: float, r_max: float) -> np.ndarray:
    r = grid.radius
    return (r >= r_min) & (r <= r_max)


class Defect(NamedTuple):
    value: float
    degenerate: bool


def self_similarity_defect(traj: Trajectory, t1: float, t2: float,
                           annulus: tuple[float, float] | None = None) -> Defect:
    """Relative L2 distance between sqrt(t) u(sqrt(t) y, t) at t1 and t2.

    Both rescaled fields are sampled on an evaluation grid of side
    ``L / max(1, sqrt(t1), sqrt(t2))`` and compared on the annulus
    ``[Le/16, Le/4]`` of that grid unless ``annulus`` is given. The denominator
    is the mean of the two norms, which keeps the defect symmetric. A zero
    trajectory returns ``Defect(0.0, degenerate=True)``.
    """
    grid = traj.grid
    u1, u2 = traj.at(t1), traj.at(t2)
    if not (t1 > 0 and t2 > 0):
        raise ValueError("times must be positive")
    l1, l2 = math.sqrt(t1), math.sqrt(t2)
    eval_grid = Grid3(grid.n, grid.box_length / max(1.0, l1, l2))
    w1 = rescale(grid, u1, l1, eval_grid)
    w2 = rescale(grid, u2, l2, eval_grid)
    lo, hi = annulus or (eval_grid.box_length / 16, eval_grid.box_length / 4)
    mask = annulus_mask(eval_grid, lo, hi)
    scale = 0.5 * (lp_norm(eval_grid, w1, 2, mask) + lp_norm(eval_grid, w2, 2, mask))
    if scale == 0:
        return Defect(0.0, True)
    return Defect(lp_norm(eval_grid, w1 - w2, 2, mask) / scale, False)


@dataclass(frozen=True)
class ProfileReport:
    profile: np.ndarray
    time: float
    linear_residual_norm: float
    full_residual_norm: float
    profile_norm: float
    source: str
    radius: float


def linear_profile_operator(grid: Grid3, U: np.ndarray, params: LameParams) -> np.ndarray:
    """-lap U - kappa grad div U - (x/2).grad U - U/2 with spectral derivatives."""
    uh = fft(U)
    k = grid.kvec
    lap = ifft(-grid.k2 * uh)
    grad_div = ifft(-k * np.sum(k * uh, axis=0))
    # du[i, j] = d_j U_i
    du = ifft(1j * k[None, :] * uh[:, None])
    drift = 0.5 * np.einsum("jxyz,ijxyz->ixyz", grid.coords, du)
    return -lap - params.kappa * grad_div - drift - 0.5 * U


def profile_residual(grid: Grid3, U: np.ndarray, model: ModelKind | None, params: LameParams,
                     radius: float | None = None, source: str = "evolved") -> ProfileReport:
    """Residual of the profile equation, measured in L2 on the centered ball of ``radius``
    (default L/4) where the non-periodic drift coefficient x/2 is trusted."""
    check_finite(U, "profile")
    if source not in ("evolved", "semigroup"):
        raise ValueError(f"source must be 'evolved' or 'semigroup', got {source!r}")
    radius = grid.box_length / 4 if radius is None else radius
    ball = grid.ball_mask(radius)
    lin = linear_profile_operator(grid, U, params)
    full = lin if model is None else lin + nonlinearity(grid, U, model)
    return ProfileReport(
        profile=U,
        time=1.0,
        linear_residual_norm=lp_norm(grid, lin, 2, ball),
        full_residual_norm=lp_norm(grid, full, 2, ball),
        profile_norm=lp_norm(grid, U, 2, ball),
        source=source,
        radius=radius,
    )
