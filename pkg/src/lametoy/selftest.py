"""Fast built-in example suite behind ``lametoy selftest``."""

from __future__ import annotations

import math
import sys
import time
from typing import Callable

import numpy as np

from . import decay, diagnostics
from .config import dump_config, parse_config
from .evolution import StepperConfig, Trajectory, evolve
from .models import ModelKind, energy_flux
from .semigroup import LameParams, lame_apply
from .snapshot import SnapshotMeta, decode_snapshot, encode_snapshot
from .spectral import Grid3, divergence, curl, helmholtz_decompose, ifft, lp_norm


def smooth_random_field(grid: Grid3, rng: np.random.Generator, max_mode: int = 3) -> np.ndarray:
    """Random real field supported on modes with |m_i| <= max_mode."""
    coeffs = rng.standard_normal((3, *grid.shape)) + 1j * rng.standard_normal((3, *grid.shape))
    band = np.abs(grid.mode_index) <= max_mode
    keep = band[:, None, None] & band[None, :, None] & band[None, None, :]
    return ifft(coeffs * keep) * 0.1 * (2 * max_mode + 1) ** -1.5


def _semigroup_modes(rng) -> float:
    g = Grid3(16, 2 * math.pi)
    x = g.coords
    err = 0.0
    for kappa in (0.0, 1.0, 5.0):
        p = LameParams(kappa)
        sol = np.stack([np.zeros_like(x[0]), np.sin(2 * x[0]), np.zeros_like(x[0])])
        grad = np.stack([np.sin(2 * x[0]), np.zeros_like(x[0]), np.zeros_like(x[0])])
        err = max(err, np.max(np.abs(lame_apply(g, sol, 0.3, p) - math.exp(-4 * 0.3) * sol)))
        err = max(err, np.max(np.abs(lame_apply(g, grad, 0.3, p) - math.exp(-4 * (1 + kappa) * 0.3) * grad)))
    return err


def _helmholtz(rng) -> float:
    g = Grid3(16, 2 * math.pi)
    u = smooth_random_field(g, rng, 6)
    parts = helmholtz_decompose(g, u)
    return max(
        np.max(np.abs(parts.solenoidal + parts.gradient - u)),
        np.max(np.abs(divergence(g, parts.solenoidal))),
        np.max(np.abs(curl(g, parts.gradient))),
    )


def _energy_pairing(rng) -> float:
    g = Grid3(16, 2 * math.pi)
    u = smooth_random_field(g, rng)
    worst = 0.0
    for kind in (ModelKind.mod1(), ModelKind.mod2()):
        scale = lp_norm(g, u, 2) ** 2 * lp_norm(g, u, math.inf)
        worst = max(worst, abs(energy_flux(g, u, kind)) / scale)
    return worst


def _linear_evolve(rng) -> float:
    g = Grid3(16, 2 * math.pi)
    u = smooth_random_field(g, rng)
    p = LameParams(1.0)
    traj = evolve(g, u, None, p, StepperConfig(t_end=0.2, dt=0.05))
    return float(np.max(np.abs(traj.at(0.2) - lame_apply(g, u, 0.2, p))))


def _y_linear(rng) -> float:
    g = Grid3(32, 4.0)
    u = g.zeros()
    u[0] = g.coords[0]
    traj = Trajectory.stationary(g, u, np.linspace(-1.0, 0.0, 21))
    y = diagnostics.oscillation_y(traj, diagnostics.ParabolicCylinder((0, 0, 0), 0.0, 1.0))
    return abs(y - 0.5) / 0.5


def _holder_linear(rng) -> float:
    g = Grid3(16, 4.0)
    u = g.zeros()
    u[0] = g.coords[0]
    traj = Trajectory.stationary(g, u, np.linspace(-1.0, 0.0, 5))
    cyl = diagnostics.ParabolicCylinder((0, 0, 0), 0.0, 1.0)
    return abs(diagnostics.holder_seminorm(traj, 1.0, cyl, 500, seed=int(rng.integers(2**32))) - 1.0)


def _apriori_constant(rng) -> float:
    g = Grid3(32, 8.0)
    c = np.array([1.0, -2.0, 0.5])
    u = np.broadcast_to(c[:, None, None, None], (3, *g.shape)).copy()
    traj = Trajectory.stationary(g, u, [0.0, 0.5, 1.0])
    rep = diagnostics.apriori_quantities(traj, u, 1.5, 0.4)
    vol = 4 * math.pi / 3 * 1.5**3
    c2 = float(c @ c)
    return max(abs(rep.alpha_R / (c2 * vol) - 1), abs(rep.A_R / (0.5 * c2 * vol) - 1))


def _fit_power_law(rng) -> float:
    r = np.geomspace(2.0, 8.0, 12)
    table = decay.ShellTable(r, (1 + r) ** -3.0, (0, 0, 0), (2.0, 8.0))
    return abs(decay.fit_decay(table).slope + 3.0)


def _snapshot_roundtrip(rng) -> float:
    f = rng.standard_normal((3, 8, 8, 8))
    g, _ = decode_snapshot(encode_snapshot(f, SnapshotMeta(8, 1.0, 1.0, 0.0)))
    return 0.0 if np.array_equal(f.view(np.uint64), g.view(np.uint64)) else 1.0


def _config_roundtrip(rng) -> float:
    c = parse_config("model.variant = mod2\ninitial.trace = swirl\n")
    return 0.0 if parse_config(dump_config(c)) == c else 1.0


CHECKS: list[tuple[str, Callable[[np.random.Generator], float], float]] = [
    ("semigroup single modes", _semigroup_modes, 1e-10),
    ("helmholtz invariants", _helmholtz, 1e-12),
    ("energy pairing vanishes", _energy_pairing, 1e-9),
    ("linear evolve equals semigroup", _linear_evolve, 1e-10),
    ("Y of linear field", _y_linear, 0.02),
    ("holder of linear field", _holder_linear, 1e-12),
    ("a priori constant field", _apriori_constant, 0.02),
    ("exact power-law fit", _fit_power_law, 1e-10),
    ("snapshot round trip", _snapshot_roundtrip, 0.0),
    ("config round trip", _config_roundtrip, 0.0),
]


def run_selftest(seed: int = 0, quiet: bool = False) -> int:
    """Run every check; returns 0 if all pass and 1 otherwise."""
    rng = np.random.default_rng(seed)
    failures = 0
    for name, check, tol in CHECKS:
        start = time.perf_counter()
        try:
            err = float(check(rng))
            ok = err <= tol
            detail = f"error {err:.3e} (tol {tol:.0e})"
        except Exception as exc:  # report and keep going
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failures += not ok
        if not quiet:
            status = "PASS" if ok else "FAIL"
            print(f"{status}  {name}: {detail} [{time.perf_counter() - start:.2f}s]", file=sys.stderr)
    return 0 if failures == 0 else 1
