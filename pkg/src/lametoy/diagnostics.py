"""Regularity functionals evaluated on trajectories.

Cylinder means use the grid-point indicator of the ball. Ball integrals for the
a priori quantities weight each node by clip((R - r)/h + 1/2, 0, 1), a radial
ramp that approximates the fraction of its cell inside the ball and keeps them
stable under grid refinement. Time integrals use the trapezoid rule over
retained snapshots. Parabolic cylinders are Q(z0, R) = B(x0, R) x (t0 - R^2, t0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft

from .evolution import Trajectory
from .models import ModelKind, PressureLaw, Variant, nonlinearity
from .semigroup import LameParams
from .spectral import Grid3, fft, ifft

TIME_TOL = 1e-12


@dataclass(frozen=True)
class ParabolicCylinder:
    center: tuple[float, float, float]
    t0: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def _time_weights(times: np.ndarray) -> np.ndarray:
    """Trapezoid weights normalized to sum to one."""
    if len(times) == 1:
        return np.ones(1)
    dt = np.diff(times)
    w = np.zeros(len(times))
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w / w.sum()


def _cylinder_samples(traj: Trajectory, cyl: ParabolicCylinder, min_times: int = 3):
    grid = traj.grid
    half = grid.box_length / 2
    if any(abs(c) + cyl.radius > half + 1e-12 for c in cyl.center):
        raise ValueError(f"ball B({cyl.center}, {cyl.radius}) leaves the box [-{half}, {half}]^3")
    mask = grid.ball_mask(cyl.radius, cyl.center)
    if not mask.any():
        raise ValueError(f"no grid points inside B({cyl.center}, {cyl.radius})")
    times = np.asarray(traj.times)
    lo = cyl.t0 - cyl.radius**2
    if lo < times[0] - TIME_TOL or cyl.t0 > times[-1] + TIME_TOL:
        raise ValueError(
            f"cylinder time window [{lo:.6g}, {cyl.t0:.6g}] leaves the sampled span [{times[0]:.6g}, {times[-1]:.6g}]"
        )
    sel = np.nonzero((times >= lo - TIME_TOL) & (times <= cyl.t0 + TIME_TOL))[0]
    if len(sel) < min_times:
        raise ValueError(
            f"cylinder time window [{lo:.6g}, {cyl.t0:.6g}] holds {len(sel)} snapshot(s); need {min_times}"
        )
    return mask, sel


def cylinder_mean(traj: Trajectory, cyl: ParabolicCylinder) -> np.ndarray:
    """Space-time mean of u over the cylinder (3-vector)."""
    mask, sel = _cylinder_samples(traj, cyl)
    w = _time_weights(np.asarray(traj.times)[sel])
    return sum(wi * traj.snapshots[i][:, mask].mean(axis=1) for wi, i in zip(w, sel))


def oscillation_y(traj: Trajectory, cyl: ParabolicCylinder) -> float:
    """(mean over Q of |u - (u)_Q|^3)^(1/3)."""
    mask, sel = _cylinder_samples(traj, cyl)
    w = _time_weights(np.asarray(traj.times)[sel])
    mean = sum(wi * traj.snapshots[i][:, mask].mean(axis=1) for wi, i in zip(w, sel))
    cubes = 0.0
    for wi, i in zip(w, sel):
        dev = traj.snapshots[i][:, mask] - mean[:, None]
        cubes += wi * np.mean(np.sqrt(np.sum(dev**2, axis=0)) ** 3)
    return float(cubes ** (1.0 / 3.0))


@dataclass(frozen=True)
class OscillationReport:
    theta: float
    radii: list[float]
    y_values: list[float]
    ratios: list[float]

    @property
    def undefined_ratios(self) -> list[int]:
        return [i for i, r in enumerate(self.ratios) if math.isnan(r)]


def oscillation_cascade(traj: Trajectory, center, t0: float, radius: float, theta: float,
                        k_max: int, min_points_radius: float = 1.0) -> OscillationReport:
    """Y on the nested cylinders of radius theta^k R, k = 0..k_max, and consecutive ratios.

    The cascade stops early (with a warning) once a cylinder has radius below
    ``min_points_radius`` grid spacings (a ball of radius h holds 7 nodes) or
    fewer than 3 time slices. Ratios
    with a zero denominator are NaN.
    """
    if not 0 < theta < 1 / 3:
        raise ValueError(f"theta must lie in (0, 1/3), got {theta}")
    radii, ys = [], []
    for k in range(k_max + 1):
        r = radius * theta**k
        if r < min_points_radius * traj.grid.spacing:
            warnings.warn(f"cascade truncated at k = {k}: radius {r:.3g} under-resolved on the grid")
            break
        try:
            ys.append(oscillation_y(traj, ParabolicCylinder(center, t0, r)))
        except ValueError as exc:
            if k == 0:
                raise
            warnings.warn(f"cascade truncated at k = {k}: {exc}")
            break
        radii.append(r)
    ratios = [b / a if a > 0 else float("nan") for a, b in zip(ys, ys[1:])]
    return OscillationReport(theta, radii, ys, ratios)


# -- local energy -----------------------------------------------------------


def _bump(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """b(s) = exp(1 - 1/(1 - s^2)) on |s| < 1 (b(0) = 1) and its derivative."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    q = np.where(inside, 1.0 - s**2, 1.0)
    b = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
    db = np.where(inside, b * (-2.0 * s / q**2), 0.0)
    return b, db


def bump_test_function(grid: Grid3, times: Sequence[float], center, radius: float,
                       t_start: float, t_stop: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """phi(x, t) = b(|x - c| / radius) * b((t - t_mid) / t_half) and d_t phi at each time."""
    if not t_stop > t_start:
        raise ValueError("need t_stop > t_start")
    c = np.asarray(center, dtype=float).reshape(3, 1, 1, 1)
    rho = np.sqrt(np.sum((grid.coords - c) ** 2, axis=0)) / radius
    space, _ = _bump(rho)
    mid, half = 0.5 * (t_start + t_stop), 0.5 * (t_stop - t_start)
    phi, dphi = [], []
    for t in times:
        b, db = _bump((t - mid) / half)
        phi.append(space * b)
        dphi.append(space * db / half)
    return phi, dphi


def _trapezoid(times: np.ndarray, values: Sequence[float]) -> float:
    return float(np.trapezoid(np.asarray(values), times)) if len(times) > 1 else 0.0


def local_energy_terms(traj: Trajectory, model: ModelKind | None, params: LameParams,
                       phi: Sequence[np.ndarray], dphi_dt: Sequence[np.ndarray] | None = None
                       ) -> tuple[float, float]:
    """Both sides (dissipation, right-hand side) of the local energy relation.

    lhs = int int (|grad u|^2 + kappa (div u)^2) phi
    rhs = int int |u|^2/2 (d_t phi + lap phi) + int int (c |u|^2 - kappa div u) u.grad phi

    with c = 1/2 for Mod1 and c = 1 for Mod2 with the quadratic pressure. For
    the linear pressure law, which has no flux form, the nonlinear part is the
    pairing -int int phi u.N(u) instead. ``model=None`` means no nonlinearity.
    If ``dphi_dt`` is omitted it is taken by second-order differences in time.
    """
    grid = traj.grid
    times = np.asarray(traj.times, dtype=float)
    if len(phi) != len(times):
        raise ValueError(f"phi has {len(phi)} time samples, trajectory has {len(times)}")
    if any(np.min(p) < 0 for p in phi):
        raise ValueError("test function phi must be >= 0")
    if dphi_dt is None:
        dphi_dt = list(np.gradient(np.asarray(phi), times, axis=0))
    k = grid.kvec
    lhs_t, rhs_t = [], []
    for u, p, dp in zip(traj.snapshots, phi, dphi_dt):
        uh = fft(u)
        du = ifft(1j * k[None, :] * uh[:, None])
        div = np.trace(du)
        ph = fft(p)
        grad_p = ifft(1j * k * ph)
        lap_p = ifft(-grid.k2 * ph)
        speed2 = np.sum(u**2, axis=0)
        u_grad_p = np.sum(u * grad_p, axis=0)
        dissip = np.sum(du**2, axis=(0, 1)) + params.kappa * div**2
        rhs = 0.5 * speed2 * (dp + lap_p) - params.kappa * div * u_grad_p
        if model is not None:
            if model.variant is Variant.MOD1:
                rhs = rhs + 0.5 * speed2 * u_grad_p
            elif model.pressure_law is PressureLaw.QUADRATIC:
                rhs = rhs + speed2 * u_grad_p
            else:
                rhs = rhs - p * np.sum(u * nonlinearity(grid, u, model), axis=0)
        lhs_t.append(np.sum(dissip * p) * grid.cell_volume)
        rhs_t.append(np.sum(rhs) * grid.cell_volume)
    return _trapezoid(times, lhs_t), _trapezoid(times, rhs_t)


def local_energy_residual(traj: Trajectory, model: ModelKind | None, params: LameParams,
                          phi: Sequence[np.ndarray], dphi_dt: Sequence[np.ndarray] | None = None) -> float:
    """lhs - rhs of the local energy relation; zero (to quadrature order) for smooth solutions."""
    lhs, rhs = local_energy_terms(traj, model, params, phi, dphi_dt)
    return lhs - rhs


# -- a priori quantities ------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    alpha_R: float
    A_R: float
    lambda_window: float
    radius: float
    energy_sup: float
    dissipation_sup: float
    centers: np.ndarray
    center_energy: np.ndarray
    center_dissipation: np.ndarray
    center_alpha: np.ndarray

    @property
    def ratio(self) -> float:
        return self.A_R / self.alpha_R if self.alpha_R > 0 else float("nan")


def ball_weights(grid: Grid3, radius: float) -> np.ndarray:
    """Cell-fraction weights of the centered ball: 1 inside, 0 outside, linear across one spacing."""
    return np.clip((radius - grid.radius) / grid.spacing + 0.5, 0.0, 1.0)


def ball_integrals(grid: Grid3, density: np.ndarray, radius: float) -> np.ndarray:
    """int_{B(x0, R)} density for every grid center x0 (periodic wrap), by FFT convolution."""
    kernel = np.fft.ifftshift(ball_weights(grid, radius))
    conv = scipy.fft.ifftn(scipy.fft.fftn(density) * scipy.fft.fftn(kernel)).real
    return conv * grid.cell_volume


def apriori_quantities(traj: Trajectory, u0: np.ndarray, radius: float, lam: float,
                       stride: int = 2) -> EnergyReport:
    """alpha(R) and A_R(lambda), with the sup over x0 taken on a lattice of ``stride`` spacings.

    A_R(lambda) = sup_x0 max_{t <= lambda R^2} int_B |u|^2/2
                + sup_x0 int_0^{lambda R^2} int_B (|grad u|^2 + kappa (div u)^2).
    Balls wrap periodically. The time integral uses the trapezoid rule on the
    retained snapshots, closing the last partial interval by linear interpolation.
    """
    grid = traj.grid
    params = traj.params
    window = lam * radius**2
    times = np.asarray(traj.times)
    if window > times[-1] * (1 + 1e-12):
        raise ValueError(f"lambda R^2 = {window:.6g} exceeds the last retained time {times[-1]:.6g}")
    sl = (slice(None, None, stride),) * 3
    centers = np.stack([c[sl].ravel() for c in grid.coords], axis=1)
    k = grid.kvec

    alpha_field = ball_integrals(grid, np.sum(u0**2, axis=0), radius)[sl]
    energy = None
    dens = []
    used_times = []
    for t, u in zip(times, traj.snapshots):
        if t > window * (1 + 1e-12):
            break
        e = ball_integrals(grid, 0.5 * np.sum(u**2, axis=0), radius)[sl]
        energy = e if energy is None else np.maximum(energy, e)
        uh = fft(u)
        du = ifft(1j * k[None, :] * uh[:, None])
        d = np.sum(du**2, axis=(0, 1)) + traj.params.kappa * np.trace(du) ** 2
        dens.append(ball_integrals(grid, d, radius)[sl])
        used_times.append(t)
    used_times = np.asarray(used_times)
    dissipation = np.zeros_like(alpha_field)
    for i in range(1, len(used_times)):
        dissipation += 0.5 * (used_times[i] - used_times[i - 1]) * (dens[i] + dens[i - 1])
    if used_times[-1] < window and len(used_times) < len(times):
        # partial interval up to the window end, integrand interpolated linearly
        j = len(used_times)
        t_a, t_b = used_times[-1], times[j]
        u = traj.snapshots[j]
        uh = fft(u)
        du = ifft(1j * k[None, :] * uh[:, None])
        d_b = ball_integrals(grid, np.sum(du**2, axis=(0, 1)) + params.kappa * np.trace(du) ** 2, radius)[sl]
        frac = (window - t_a) / (t_b - t_a)
        d_w = dens[-1] + frac * (d_b - dens[-1])
        dissipation += 0.5 * (window - t_a) * (dens[-1] + d_w)
    e_sup, d_sup = float(energy.max()), float(dissipation.max())
    return EnergyReport(
        alpha_R=float(alpha_field.max()),
        A_R=e_sup + d_sup,
        lambda_window=window,
        radius=radius,
        energy_sup=e_sup,
        dissipation_sup=d_sup,
        centers=centers,
        center_energy=energy.ravel(),
        center_dissipation=dissipation.ravel(),
        center_alpha=alpha_field.ravel(),
    )


# -- Hölder seminorm --------------------------------------------------------


def holder_seminorm(traj: Trajectory, gamma: float, region: ParabolicCylinder,
                    sample_budget: int, seed: int = 0) -> float:
    """Lower bound of the parabolic C^{gamma, gamma/2} seminorm on ``region``.

    Maximum of |u(z1) - u(z2)| / (|x1 - x2| + sqrt|t1 - t2|)^gamma over all
    nearest-neighbour pairs (each space axis and consecutive snapshots) plus
    ``sample_budget`` seeded random pairs. A larger budget extends the same
    random sequence, so the estimate never decreases with the budget.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    grid = traj.grid
    mask, sel = _cylinder_samples(traj, region, min_times=1)
    times = np.asarray(traj.times)[sel]
    vals = np.stack([traj.snapshots[i][:, mask] for i in sel])  # (T, 3, P)
    pts = grid.coords[:, mask]  # (3, P)
    best = 0.0

    def update(du: np.ndarray, dist: np.ndarray) -> None:
        nonlocal best
        ok = dist > 0
        if ok.any():
            best = max(best, float(np.max(du[ok] / dist[ok] ** gamma)))

    # space neighbours: index shifts along each axis, both ends inside the ball
    ball_index = -np.ones(grid.shape, dtype=np.int64)
    ball_index[mask] = np.arange(mask.sum())
    for axis in range(3):
        a = np.take(ball_index, range(grid.n - 1), axis=axis)
        b = np.take(ball_index, range(1, grid.n), axis=axis)
        both = (a >= 0) & (b >= 0)
        ia, ib = a[both], b[both]
        dist = np.full(ia.shape, grid.spacing)
        for t in range(len(times)):
            du = np.sqrt(np.sum((vals[t][:, ia] - vals[t][:, ib]) ** 2, axis=0))
            update(du, dist)
    # time neighbours
    for t in range(len(times) - 1):
        du = np.sqrt(np.sum((vals[t + 1] - vals[t]) ** 2, axis=0))
        update(du, np.full(du.shape, math.sqrt(times[t + 1] - times[t])))
    # random pairs
    if sample_budget > 0:
        rng = np.random.default_rng(seed)
        draws = rng.random((sample_budget, 4))
        P, T = pts.shape[1], len(times)
        p1 = np.minimum((draws[:, 0] * P).astype(np.int64), P - 1)
        p2 = np.minimum((draws[:, 1] * P).astype(np.int64), P - 1)
        t1 = np.minimum((draws[:, 2] * T).astype(np.int64), T - 1)
        t2 = np.minimum((draws[:, 3] * T).astype(np.int64), T - 1)
        du = np.sqrt(np.sum((vals[t1, :, p1] - vals[t2, :, p2]) ** 2, axis=1))
        dx = np.sqrt(np.sum((pts[:, p1] - pts[:, p2]) ** 2, axis=0))
        dist = dx + np.sqrt(np.abs(times[t1] - times[t2]))
        update(du, dist)
    return best
