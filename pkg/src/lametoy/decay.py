"""Shellwise sup norms and log-log decay fits for U - S(1) u0.

For self-similar data the profile U = u(., 1) decays like |x|^-(1+|alpha|)
while the nonlinear correction U - S(1) u0 should decay like
(1+|x|)^-(3+|alpha|). Fits use log(1 + r) on geometric shells.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .evolution import Trajectory
from .semigroup import LameParams, lame_apply
from .spectral import Grid3, derivative, pointwise_magnitude

MIN_SHELLS = 5
DEFAULT_SHELLS = 12
NOISE_FACTOR = 1e3


class DecayFitError(ValueError):
    """Too few usable shells for a fit."""


@dataclass(frozen=True)
class ShellTable:
    radii: np.ndarray
    sup_values: np.ndarray
    alpha: tuple[int, int, int]
    annulus: tuple[float, float]


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    table: ShellTable
    residual: float = 0.0


@dataclass(frozen=True)
class DecayEntry:
    """One alpha of a decay report: fits for U - V and for U, or a noise-floor flag."""

    alpha: tuple[int, int, int]
    difference: ShellTable
    profile: ShellTable
    difference_fit: DecayFit | None
    profile_fit: DecayFit | None
    below_noise_floor: bool
    notes: list[str] = field(default_factory=list)


def default_radii(grid: Grid3, annulus: tuple[float, float] | None = None,
                  count: int = DEFAULT_SHELLS) -> np.ndarray:
    lo, hi = annulus or (grid.box_length / 16, grid.box_length / 4)
    return np.geomspace(lo, hi, count)


def _check_alpha(alpha) -> tuple[int, int, int]:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != 3 or min(alpha) < 0 or sum(alpha) > 2:
        raise ValueError(f"alpha must be a multi-index with |alpha| <= 2, got {alpha}")
    return alpha


def shell_sup(grid: Grid3, f: np.ndarray, alpha, radii, r_max: float | None = None) -> ShellTable:
    """max of |d^alpha f| over grid points with |x| in [r - h, r + h] for each r.

    Radii must lie in [2h, r_max]; ``r_max`` defaults to L/2 - h.
    """
    alpha = _check_alpha(alpha)
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be a non-empty strictly increasing list")
    h = grid.spacing
    r_max = grid.box_length / 2 - h if r_max is None else r_max
    if radii[0] < 2 * h - 1e-12 or radii[-1] > r_max + 1e-12:
        raise ValueError(f"radii must lie in [{2 * h:.6g}, {r_max:.6g}]")
    mag = pointwise_magnitude(derivative(grid, f, alpha))
    r = grid.radius
    sups = np.empty(len(radii))
    for i, rad in enumerate(radii):
        shell = (r >= rad - h) & (r <= rad + h)
        if not shell.any():
            raise ValueError(f"shell at r = {rad:.6g} contains no grid points")
        sups[i] = mag[shell].max()
    return ShellTable(radii, sups, alpha, (float(radii[0]), float(radii[-1])))


def fit_decay(table: ShellTable) -> DecayFit:
    """Least-squares line through (log(1 + r), log sup); zero shells are dropped with a warning."""
    keep = table.sup_values > 0
    if not keep.all():
        warnings.warn(f"{int((~keep).sum())} shell(s) with zero sup excluded from the fit")
    if keep.sum() < MIN_SHELLS:
        raise DecayFitError(f"need at least {MIN_SHELLS} shells with positive sup, have {int(keep.sum())}")
    x = np.log1p(table.radii[keep])
    y = np.log(table.sup_values[keep])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    ss_res = float(res[0]) if len(res) else 0.0
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), table, ss_res)


def _try_fit(table: ShellTable, notes: list[str], label: str) -> DecayFit | None:
    try:
        return fit_decay(table)
    except DecayFitError as exc:
        notes.append(f"{label}: {exc}")
        return None


def decay_report(traj: Trajectory, u0: np.ndarray, params: LameParams, alphas,
                 annulus: tuple[float, float] | None = None, shells: int = DEFAULT_SHELLS,
                 time: float = 1.0) -> list[DecayEntry]:
    """Fits of shell sups of d^alpha(U - V) and d^alpha U, with U = u(., 1) and V = S(1) u0.

    When the difference sits below 1e3 * eps * ||U||_inf the fit is skipped
    and the entry is flagged instead.
    """
    grid = traj.grid
    try:
        U = traj.at(time)
    except (KeyError, ValueError, IndexError) as exc:
        raise ValueError(f"trajectory does not retain t = {time}") from exc
    V = lame_apply(grid, u0, time, params)
    D = U - V
    radii = default_radii(grid, annulus, shells)
    floor = NOISE_FACTOR * np.finfo(float).eps * float(np.max(pointwise_magnitude(U), initial=0.0))
    out = []
    for alpha in alphas:
        alpha = _check_alpha(alpha)
        notes: list[str] = []
        dtab = shell_sup(grid, D, alpha, radii)
        ptab = shell_sup(grid, U, alpha, radii)
        below = bool(np.max(dtab.sup_values) < floor) or floor == 0.0
        if below:
            notes.append("difference below noise floor")
            dfit = None
        else:
            dfit = _try_fit(dtab, notes, "difference")
        pfit = _try_fit(ptab, notes, "profile")
        out.append(DecayEntry(alpha, dtab, ptab, dfit, pfit, below, notes))
    return out
