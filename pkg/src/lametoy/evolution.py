"""Time evolution of the toy models.

Two independent solvers for d_t u = L u - N(u), L = lap + kappa grad div:

* :func:`evolve` -- exponential time differencing (ETD-RK2 / ETD-RK4 of Cox and
  Matthews) with the Lamé part applied as the exact multiplier;
* :func:`mild_solve` -- Picard iteration on the Duhamel formula on a fixed grid
  of Simpson nodes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .models import ModelKind, nonlinearity_hat
from .semigroup import LameParams, apply_split, decay_rates, lame_apply_spectral, simpson_weights
from .spectral import Grid3, check_finite, fft, gradient_projection, ifft

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6


class NumericalAbort(RuntimeError):
    """A run was stopped for numerical reasons (blow-up, non-contraction, ...)."""


class BlowUpError(NumericalAbort):
    def __init__(self, time: float, norm: float, limit: float):
        super().__init__(f"blow-up guard tripped at t = {time:.6g}: |u|_inf = {norm:.6g} exceeds {limit:.6g}")
        self.time = time


class ContractionError(NumericalAbort):
    pass


class Scheme(str, Enum):
    ETD_RK2 = "etd_rk2"
    ETD_RK4 = "etd_rk4"


@dataclass(frozen=True)
class StepperConfig:
    t_end: float
    dt: float | None = None
    cfl: float | None = None
    scheme: Scheme = Scheme.ETD_RK4
    dealias: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("exactly one of dt and cfl must be given")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")


@dataclass
class Trajectory:
    grid: Grid3
    times: list[float]
    snapshots: list[np.ndarray]
    model: ModelKind | None
    params: LameParams
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ValueError("times and snapshots differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    def index(self, t: float, tol: float = 1e-9) -> int:
        for i, ti in enumerate(self.times):
            if abs(ti - t) <= tol * max(1.0, abs(t)):
                return i
        raise KeyError(f"time {t} is not retained (have {self.times})")

    def at(self, t: float) -> np.ndarray:
        return self.snapshots[self.index(t)]

    @classmethod
    def stationary(cls, grid: Grid3, u: np.ndarray, times: Sequence[float], params=None) -> "Trajectory":
        """Time-independent trajectory sharing one array across all times."""
        return cls(grid, list(map(float, times)), [u] * len(times), None, params or LameParams())


def cfl_dt(u: np.ndarray, grid: Grid3, cfl: float, params: LameParams | None = None) -> float:
    """Advective step cfl * h / max(|u|_inf, h); the Lamé part needs no restriction."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    h = grid.spacing
    return cfl * h / max(float(np.max(np.abs(u))) if np.size(u) else 0.0, h)


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_1, phi_2, phi_3 of real z; Taylor series for |z| < 1."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1.0
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    em1 = np.expm1(zl)
    direct = (em1 / zl, (em1 - zl) / zl**2, (em1 - zl - 0.5 * zl**2) / zl**3)
    out = []
    for k, d in zip((1, 2, 3), direct):
        series = np.zeros_like(z)
        for j in range(24, -1, -1):
            series = series * zs + 1.0 / math.factorial(j + k)
        out.append(np.where(small, series, d))
    return tuple(out)


class ETDStepper:
    """Exact-linear exponential stepper acting on spectral coefficients."""

    def __init__(self, grid: Grid3, model: ModelKind | None, params: LameParams,
                 scheme: Scheme = Scheme.ETD_RK4, dealias: bool = True):
        self.grid = grid
        self.model = model
        self.params = params
        self.scheme = Scheme(scheme)
        self.dealias = dealias
        self.rates = decay_rates(grid, params)
        self._coeffs: dict[float, dict] = {}
        self.evaluations = 0

    def forcing(self, uh: np.ndarray) -> np.ndarray:
        """-N(u) in spectral space."""
        self.evaluations += 1
        return -nonlinearity_hat(self.grid, uh, self.model, self.dealias)

    def _coefficients(self, h: float) -> dict:
        c = self._coeffs.get(h)
        if c is not None:
            return c
        if len(self._coeffs) > 8:
            self._coeffs.clear()
        parts = []
        for rate in self.rates:
            z = -rate * h
            p1, p2, p3 = phi_functions(z)
            if self.scheme is Scheme.ETD_RK2:
                parts.append(dict(E=np.exp(z), a=h * p1, b=h * p2))
            else:
                q1 = phi_functions(z / 2)[0]
                parts.append(dict(
                    E=np.exp(z), E2=np.exp(z / 2), Q=0.5 * h * q1,
                    f1=h * (p1 - 3 * p2 + 4 * p3), f2=h * (p2 - 2 * p3), f3=h * (-p2 + 4 * p3),
                ))
        sol, grad = parts
        c = {key: (sol[key], grad[key]) for key in sol}
        self._coeffs[h] = c
        return c

    def _op(self, pair, vh: np.ndarray) -> np.ndarray:
        return apply_split(self.grid, vh, pair[0], pair[1])

    def step(self, uh: np.ndarray, h: float) -> np.ndarray:
        c = self._coefficients(h)
        if self.model is None:
            return self._op(c["E"], uh)
        op = self._op
        if self.scheme is Scheme.ETD_RK2:
            fu = self.forcing(uh)
            a = op(c["E"], uh) + op(c["a"], fu)
            return a + op(c["b"], self.forcing(a) - fu)
        fu = self.forcing(uh)
        e2u = op(c["E2"], uh)
        a = e2u + op(c["Q"], fu)
        fa = self.forcing(a)
        b = e2u + op(c["Q"], fa)
        fb = self.forcing(b)
        cc = op(c["E2"], a) + op(c["Q"], 2 * fb - fu)
        fc = self.forcing(cc)
        return op(c["E"], uh) + op(c["f1"], fu) + op(c["f2"], 2 * (fa + fb)) + op(c["f3"], fc)


def evolve(grid: Grid3, u0: np.ndarray, model: ModelKind | None, params: LameParams,
           cfg: StepperConfig, output_times: Sequence[float] | None = None) -> Trajectory:
    """Integrate from t = 0 and retain snapshots at 0 and at each output time.

    ``model=None`` switches the nonlinearity off (pure Lamé flow). Steps are
    shortened so that they land exactly on every output time.
    """
    check_finite(u0, "initial data")
    outs = sorted(set(float(t) for t in (output_times or [cfg.t_end])))
    if outs[0] <= 0 or outs[-1] > cfg.t_end * (1 + 1e-12):
        raise ValueError(f"output times must lie in (0, t_end], got {outs}")
    stepper = ETDStepper(grid, model, params, cfg.scheme, cfg.dealias)
    uh = fft(u0)
    u = np.array(u0, dtype=float, copy=True)
    initial_norm = float(np.max(np.abs(u0))) if u0.size else 0.0
    limit = BLOWUP_FACTOR * initial_norm
    times, snaps = [0.0], [u.copy()]
    t, steps = 0.0, 0

    def advance(h):
        nonlocal uh, u, steps
        uh = stepper.step(uh, h)
        steps += 1
        u = ifft(uh)
        norm = float(np.max(np.abs(u)))
        if not np.isfinite(norm) or (initial_norm > 0 and norm > limit):
            raise BlowUpError(t + h, norm, limit)

    for target in outs:
        if cfg.dt is not None:
            m = max(1, math.ceil((target - t) / cfg.dt - 1e-9))
            h = (target - t) / m
            for k in range(m):
                advance(h)
                t = target if k == m - 1 else t + h
        else:
            while t < target:
                h = min(cfl_dt(u, grid, cfg.cfl, params), target - t)
                if target - t - h <= 1e-12 * max(1.0, target):
                    h = target - t
                advance(h)
                t = target if h == target - t else t + h
        times.append(target)
        snaps.append(u.copy())
    info = {"steps": steps, "nonlinear_evaluations": stepper.evaluations, "scheme": cfg.scheme.value}
    log.debug("evolve finished: %s", info)
    return Trajectory(grid, times, snaps, model, params, info)


def mild_solve(grid: Grid3, u0: np.ndarray, model: ModelKind, params: LameParams, t_end: float,
               tol: float = 1e-12, max_iter: int = 60, samples: int = 65) -> Trajectory:
    """Picard iteration u <- S(t) u0 - int_0^t S(t - s) N(u(s)) ds on ``samples`` nodes.

    The Duhamel integral at node i uses composite Simpson (3/8 on the last three
    intervals for odd i); at the first node it uses the quadratic interpolant
    through nodes 0, 1, 2. Iteration stops when the sup-in-time L2 change is
    at most ``tol``. The returned trajectory's ``info`` holds the differences
    and contraction ratios.
    """
    check_finite(u0, "initial data")
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if samples < 3:
        raise ValueError("need at least 3 time samples")
    ds = t_end / (samples - 1)
    times = [i * ds for i in range(samples)]
    rs, rg = decay_rates(grid, params)
    # multipliers for lags l * ds, l = -1 .. samples-1 (index l + 1)
    lags = np.arange(-1, samples)
    e_sol = [np.exp(-rs * lag * ds) for lag in lags]
    e_grad = [np.exp(-rg * lag * ds) for lag in lags]

    u0h = fft(u0)
    linear = [lame_apply_spectral(grid, u0h, t, params) for t in times]
    current = [x.copy() for x in linear]
    weights = [None] + [simpson_weights(i + 1, ds) if i >= 2 else None for i in range(1, samples)]
    first_node = np.array([5.0, 8.0, -1.0]) * ds / 12.0
    norm_factor = math.sqrt(grid.cell_volume * grid.n**3)

    diffs, ratios = [], []
    strikes = 0
    for iteration in range(1, max_iter + 1):
        nh = [nonlinearity_hat(grid, x, model) for x in current]
        pg = [gradient_projection(grid, x) for x in nh]
        new = [linear[0].copy()]
        for i in range(1, samples):
            if i == 1:
                idx, w = (0, 1, 2), first_node
            else:
                idx, w = range(i + 1), weights[i]
            acc = np.zeros_like(u0h)
            for j, wj in zip(idx, w):
                lag = i - j + 1
                acc += wj * (e_sol[lag] * nh[j] + (e_grad[lag] - e_sol[lag]) * pg[j])
            new.append(linear[i] - acc)
        # L2 norm of the physical difference via Parseval
        diff = max(float(np.sqrt(np.sum(np.abs(a - b) ** 2))) for a, b in zip(new, current)) * norm_factor
        current = new
        diffs.append(diff)
        if len(diffs) > 1:
            ratio = diff / diffs[-2] if diffs[-2] > 0 else 0.0
            ratios.append(ratio)
            strikes = strikes + 1 if ratio >= 1 else 0
            if strikes >= 3:
                raise ContractionError(
                    f"Picard iteration is not contracting (ratios {ratios[-3:]}); "
                    "reduce t_end or the amplitude"
                )
        log.debug("picard iteration %d: diff %.3e", iteration, diff)
        if diff <= tol:
            break
    else:
        raise ContractionError(f"Picard iteration did not reach tol {tol} in {max_iter} iterations (last {diffs[-1]:.3e})")
    snaps = [ifft(x) for x in current]
    info = {"iterations": len(diffs), "differences": diffs, "ratios": ratios}
    return Trajectory(grid, times, snaps, model, params, info)
