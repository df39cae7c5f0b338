"""Toy-model nonlinearities and mollified (-1)-homogeneous initial data.

Mod1:  N(u) = u.grad u + (u/2) div u
Mod2:  N(u) = div(u (x) u + p(u) I),  p(u) = |u|^2/2 (default) or |u|/2

Products are formed pointwise from 2/3-dealiased inputs and the result is
dealiased again, so ``<u, N(u)> = <Pu, N(Pu)>`` with ``P`` the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import sph_harm_y

from .semigroup import tensor_divergence_hat
from .spectral import Grid3, check_finite, fft, ifft, inner


class Variant(str, Enum):
    MOD1 = "mod1"
    MOD2 = "mod2"


class PressureLaw(str, Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"


@dataclass(frozen=True)
class ModelKind:
    variant: Variant = Variant.MOD1
    pressure_law: PressureLaw | None = None

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant is Variant.MOD1:
            if self.pressure_law is not None:
                raise ValueError("pressure_law applies to mod2 only")
        else:
            law = PressureLaw.QUADRATIC if self.pressure_law is None else PressureLaw(self.pressure_law)
            object.__setattr__(self, "pressure_law", law)

    @classmethod
    def mod1(cls) -> "ModelKind":
        return cls(Variant.MOD1)

    @classmethod
    def mod2(cls, pressure_law: str | PressureLaw = PressureLaw.QUADRATIC) -> "ModelKind":
        return cls(Variant.MOD2, PressureLaw(pressure_law))


def nonlinearity_hat(grid: Grid3, uh: np.ndarray, kind: ModelKind, dealias: bool = True) -> np.ndarray:
    """Spectral coefficients of N(u) given spectral coefficients of u."""
    if dealias:
        uh = uh * grid.dealias_mask
    v = ifft(uh)
    k = grid.kvec
    if kind.variant is Variant.MOD1:
        # dv[i, j] = d_j v_i
        dv = ifft(1j * k[None, :] * uh[:, None])
        div = np.trace(dv)
        out = np.einsum("jxyz,ijxyz->ixyz", v, dv) + 0.5 * v * div
        nh = fft(out)
    else:
        speed2 = np.sum(v**2, axis=0)
        if kind.pressure_law is PressureLaw.QUADRATIC:
            p = 0.5 * speed2
        else:
            p = 0.5 * np.sqrt(speed2)
        tensor = v[:, None] * v[None, :]
        tensor[[0, 1, 2], [0, 1, 2]] += p
        nh = tensor_divergence_hat(grid, fft(tensor))
    if dealias:
        nh = nh * grid.dealias_mask
    return nh


def nonlinearity(grid: Grid3, u: np.ndarray, kind: ModelKind, dealias: bool = True) -> np.ndarray:
    check_finite(u)
    return ifft(nonlinearity_hat(grid, fft(u), kind, dealias))


def pressure_gradient(grid: Grid3, u: np.ndarray, kind: ModelKind, dealias: bool = True) -> np.ndarray:
    """grad p(u) for Mod2, formed the same way as inside :func:`nonlinearity`."""
    if kind.variant is not Variant.MOD2:
        raise ValueError("pressure is defined for mod2 only")
    uh = fft(u)
    if dealias:
        uh = uh * grid.dealias_mask
    v = ifft(uh)
    speed2 = np.sum(v**2, axis=0)
    p = 0.5 * speed2 if kind.pressure_law is PressureLaw.QUADRATIC else 0.5 * np.sqrt(speed2)
    gh = 1j * grid.kvec * fft(p)
    if dealias:
        gh = gh * grid.dealias_mask
    return ifft(gh)


def energy_flux(grid: Grid3, u: np.ndarray, kind: ModelKind) -> float:
    """Box integral of u . N(u)."""
    return inner(grid, u, nonlinearity(grid, u, kind))


# -- initial data -----------------------------------------------------------


def smooth_step(tau: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for tau <= 0, 1 for tau >= 1, psi(tau)/(psi(tau)+psi(1-tau)) between,
    with psi(s) = exp(-1/s) for s > 0."""
    tau = np.asarray(tau, dtype=float)
    a = np.zeros_like(tau)
    b = np.zeros_like(tau)
    pos = tau > 0
    a[pos] = np.exp(-1.0 / tau[pos])
    neg = tau < 1
    b[neg] = np.exp(-1.0 / (1.0 - tau[neg]))
    return a / (a + b)


def inner_cutoff(s: np.ndarray) -> np.ndarray:
    """0 for s <= 1/2, 1 for s >= 1."""
    return smooth_step(2.0 * np.asarray(s) - 1.0)


def outer_cutoff(r: np.ndarray, start: float, width: float) -> np.ndarray:
    """1 for r <= start, 0 for r >= start + width."""
    return 1.0 - smooth_step((np.asarray(r) - start) / width)


TRACE_PRESETS = ("e1", "e2", "e3", "radial", "swirl")


def _real_sph_harm(l: int, m: int, polar: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    y = sph_harm_y(l, abs(m), polar, azimuth)
    if m > 0:
        return math.sqrt(2.0) * y.real
    if m < 0:
        return math.sqrt(2.0) * y.imag
    return y.real


def parse_trace(text: str):
    """Parse a trace: a preset name or ``sh: c l m a; c l m a; ...``.

    In the harmonic form each term adds ``a * Y_lm`` to component ``c`` (1, 2 or 3),
    using real harmonics (m > 0: sqrt2 Re Y_l^m, m < 0: sqrt2 Im Y_l^|m|).
    """
    text = text.strip()
    if text in TRACE_PRESETS:
        return text
    if not text.startswith("sh:"):
        raise ValueError(f"unknown trace {text!r}; presets are {', '.join(TRACE_PRESETS)} or 'sh: c l m a; ...'")
    terms = []
    for chunk in text[3:].split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split()
        if len(parts) != 4:
            raise ValueError(f"harmonic term needs 'c l m a', got {chunk.strip()!r}")
        c, l, m = (int(x) for x in parts[:3])
        a = float(parts[3])
        if c not in (1, 2, 3) or l < 0 or abs(m) > l:
            raise ValueError(f"invalid harmonic term {chunk.strip()!r}")
        terms.append((c, l, m, a))
    if not terms:
        raise ValueError("harmonic trace has no terms")
    return tuple(terms)


def format_trace(trace) -> str:
    if isinstance(trace, str):
        return trace
    return "sh: " + "; ".join(f"{c} {l} {m} {a!r}" for c, l, m, a in trace)


def evaluate_trace(trace, omega: np.ndarray) -> np.ndarray:
    """Evaluate the sphere trace at unit vectors ``omega`` (shape (3, ...))."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    if isinstance(trace, str):
        if trace in ("e1", "e2", "e3"):
            out[int(trace[1]) - 1] = 1.0
        elif trace == "radial":
            out[:] = omega
        elif trace == "swirl":
            # e3 x omega
            out[0] = -omega[1]
            out[1] = omega[0]
        else:
            raise ValueError(f"unknown trace preset {trace!r}")
        return out
    polar = np.arccos(np.clip(omega[2], -1.0, 1.0))
    azimuth = np.arctan2(omega[1], omega[0])
    for c, l, m, a in trace:
        out[c - 1] += a * _real_sph_harm(l, m, polar, azimuth)
    return out


@dataclass(frozen=True)
class InitialDataSpec:
    """u0(x) = amplitude * chi_in(|x|/inner_radius) * chi_out(|x|) * trace(x/|x|) / |x|."""

    trace: object = "e1"
    amplitude: float = 0.05
    inner_radius: float = 4.0
    outer_radius: float = 8.0
    cutoff_width: float = 4.0

    @classmethod
    def default(cls, grid: Grid3, **overrides) -> "InitialDataSpec":
        values = dict(
            trace="e1",
            amplitude=0.05,
            inner_radius=4.0 * grid.spacing,
            outer_radius=grid.box_length / 4.0,
            cutoff_width=grid.box_length / 8.0,
        )
        values.update(overrides)
        return cls(**values)

    def validate(self, grid: Grid3) -> None:
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")
        if not self.cutoff_width > 0:
            raise ValueError(f"cutoff_width must be > 0, got {self.cutoff_width}")
        if not (0 < self.inner_radius < self.outer_radius):
            raise ValueError(
                f"need 0 < inner_radius < outer_radius, got {self.inner_radius}, {self.outer_radius}"
            )
        if self.outer_radius + self.cutoff_width > grid.box_length / 2 + 1e-12:
            raise ValueError(
                f"outer_radius + cutoff_width = {self.outer_radius + self.cutoff_width} exceeds L/2 = {grid.box_length / 2}"
            )
        if isinstance(self.trace, str) and self.trace not in TRACE_PRESETS:
            raise ValueError(f"unknown trace preset {self.trace!r}")


def build_initial_data(grid: Grid3, spec: InitialDataSpec) -> np.ndarray:
    """Sample the mollified homogeneous field on the grid.

    Exactly (-1)-homogeneous for inner_radius <= |x| <= outer_radius.
    """
    spec.validate(grid)
    r = grid.radius
    safe_r = np.where(r > 0, r, 1.0)
    omega = grid.coords / safe_r
    profile = spec.amplitude * inner_cutoff(r / spec.inner_radius)
    profile = profile * outer_cutoff(r, spec.outer_radius, spec.cutoff_width) / safe_r
    profile = np.where(r > 0, profile, 0.0)
    return profile * evaluate_trace(spec.trace, omega)
