"""Experiment configuration: a flat ``key = value`` file.

Grammar
-------
* One assignment per line: ``section.key = value``. Blank lines are ignored.
* ``#`` starts a comment anywhere on a line.
* Keys are case-sensitive and must appear in :data:`SCHEMA`; unknown keys,
  repeated keys, malformed values and violated invariants are errors that
  carry the offending line number.
* Lists are comma separated (``output.times = 0.25, 0.5, 1``); multi-indices
  are semicolon separated triples (``decay.alphas = 0 0 0; 1 0 0``).
* ``auto`` selects a default derived from other keys (for example
  ``initial.inner_radius = auto`` means four grid spacings).

:func:`dump_config` writes every key with all ``auto`` values resolved, and
``parse_config(dump_config(c)) == c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .evolution import Scheme, StepperConfig
from .models import InitialDataSpec, ModelKind, PressureLaw, format_trace, parse_trace
from .semigroup import LameParams
from .spectral import Grid3

AUTO = "auto"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(where + message)


def _int(text: str) -> int:
    return int(text, 10)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def inner(text: str):
        return None if text in (AUTO, "none") else parse(text)
    return inner


def _float_list(text: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(s) for s in items)


def _alpha_list(text: str) -> tuple[tuple[int, int, int], ...]:
    out = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise ValueError(f"multi-index needs three integers, got {chunk.strip()!r}")
        out.append(tuple(_int(p) for p in parts))
    if not out:
        raise ValueError("empty multi-index list")
    return tuple(out)


def _enum(values: tuple[str, ...]) -> Callable[[str], str]:
    def inner(text: str) -> str:
        if text not in values:
            raise ValueError(f"expected one of {', '.join(values)}, got {text!r}")
        return text
    return inner


def _trace(text: str):
    return parse_trace(text)


def _u64(text: str) -> int:
    value = _int(text)
    if not 0 <= value < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


# key -> (parser, default); None defaults are resolved from other keys
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "grid.n": (_int, 32),
    "grid.box_length": (_float, 32.0),
    "model.variant": (_enum(("mod1", "mod2", "linear")), "mod1"),
    "model.pressure_law": (_optional(_enum(("quadratic", "linear"))), None),
    "lame.kappa": (_float, 1.0),
    "initial.trace": (_trace, "e1"),
    "initial.amplitude": (_float, 0.05),
    "initial.inner_radius": (_optional(_float), None),
    "initial.outer_radius": (_optional(_float), None),
    "initial.cutoff_width": (_optional(_float), None),
    "stepper.scheme": (_enum(tuple(s.value for s in Scheme)), Scheme.ETD_RK4.value),
    "stepper.dt": (_optional(_float), None),
    "stepper.cfl": (_optional(_float), None),
    "stepper.t_end": (_float, 1.0),
    "stepper.dealias": (_bool, True),
    "output.times": (_optional(_float_list), None),
    "mild.tol": (_float, 1e-12),
    "mild.max_iter": (_int, 60),
    "mild.samples": (_int, 65),
    "diagnostics.center": (_optional(_float_list), None),
    "diagnostics.t0": (_optional(_float), None),
    "diagnostics.radius": (_optional(_float), None),
    "diagnostics.theta": (_float, 0.25),
    "diagnostics.k_max": (_int, 3),
    "diagnostics.gamma": (_float, 0.5),
    "diagnostics.holder_budget": (_int, 20000),
    "diagnostics.lambda": (_float, 1.0),
    "decay.annulus": (_optional(_float_list), None),
    "decay.shells": (_int, 12),
    "decay.alphas": (_alpha_list, ((0, 0, 0),)),
    "run.seed": (_u64, 0),
    "run.output_dir": (str, "lametoy-out"),
}


@dataclass
class ExperimentConfig:
    """Fully resolved configuration; ``lines`` maps keys to their source line (not compared)."""

    values: dict[str, Any]
    lines: dict[str, int] = field(default_factory=dict, compare=False)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def grid(self) -> Grid3:
        return Grid3(self["grid.n"], self["grid.box_length"])

    @property
    def model(self) -> ModelKind | None:
        variant = self["model.variant"]
        if variant == "linear":
            return None
        if variant == "mod1":
            return ModelKind.mod1()
        return ModelKind.mod2(self["model.pressure_law"])

    @property
    def params(self) -> LameParams:
        return LameParams(self["lame.kappa"])

    @property
    def initial_spec(self) -> InitialDataSpec:
        return InitialDataSpec(
            trace=self["initial.trace"],
            amplitude=self["initial.amplitude"],
            inner_radius=self["initial.inner_radius"],
            outer_radius=self["initial.outer_radius"],
            cutoff_width=self["initial.cutoff_width"],
        )

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(
            t_end=self["stepper.t_end"],
            dt=self["stepper.dt"],
            cfl=self["stepper.cfl"],
            scheme=Scheme(self["stepper.scheme"]),
            dealias=self["stepper.dealias"],
        )

    @property
    def output_times(self) -> list[float]:
        return list(self["output.times"])

    @property
    def output_dir(self) -> str:
        return self["run.output_dir"]

    @property
    def seed(self) -> int:
        return self["run.seed"]


def _resolve(values: dict[str, Any]) -> None:
    n, L = values["grid.n"], values["grid.box_length"]
    h = L / n if n else 0.0
    if values["model.variant"] == "mod2" and values["model.pressure_law"] is None:
        values["model.pressure_law"] = PressureLaw.QUADRATIC.value
    defaults = {
        "initial.inner_radius": 4.0 * h,
        "initial.outer_radius": L / 4.0,
        "initial.cutoff_width": L / 8.0,
        "decay.annulus": (L / 16.0, L / 4.0),
        "diagnostics.center": (0.0, 0.0, 0.0),
    }
    for key, value in defaults.items():
        if values[key] is None:
            values[key] = value
    if values["stepper.dt"] is None and values["stepper.cfl"] is None:
        values["stepper.dt"] = 0.01
    if values["output.times"] is None:
        t_end = values["stepper.t_end"]
        values["output.times"] = tuple(t_end * j / 8 for j in range(1, 9))
    if values["diagnostics.t0"] is None:
        values["diagnostics.t0"] = values["output.times"][-1]
    if values["diagnostics.radius"] is None:
        t0 = values["diagnostics.t0"]
        values["diagnostics.radius"] = min(L / 8.0, math.sqrt(t0)) if t0 > 0 else L / 8.0


def _validate(values: dict[str, Any], lines: dict[str, int]) -> None:
    def fail(key: str, message: str):
        raise ConfigError(message, lines.get(key))

    n = values["grid.n"]
    if n < 8 or n % 2:
        fail("grid.n", "n must be even and ≥ 8")
    if not values["grid.box_length"] > 0:
        fail("grid.box_length", "box_length must be > 0")
    if values["lame.kappa"] < 0:
        fail("lame.kappa", "kappa must be ≥ 0")
    if values["model.variant"] != "mod2" and values["model.pressure_law"] is not None:
        fail("model.pressure_law", "pressure_law applies to mod2 only")
    grid = Grid3(n, values["grid.box_length"])
    spec_keys = ("initial.amplitude", "initial.inner_radius", "initial.outer_radius", "initial.cutoff_width")
    try:
        InitialDataSpec(
            values["initial.trace"], *(values[k] for k in spec_keys)
        ).validate(grid)
    except ValueError as exc:
        key = max(spec_keys, key=lambda k: lines.get(k, 0))
        fail(key, str(exc))
    if values["stepper.dt"] is not None and values["stepper.cfl"] is not None:
        fail("stepper.cfl", "give only one of stepper.dt and stepper.cfl")
    try:
        StepperConfig(values["stepper.t_end"], values["stepper.dt"], values["stepper.cfl"])
    except ValueError as exc:
        fail(max(("stepper.dt", "stepper.cfl", "stepper.t_end"), key=lambda k: lines.get(k, 0)), str(exc))
    times = values["output.times"]
    if any(b <= a for a, b in zip(times, times[1:])) or times[0] <= 0:
        fail("output.times", "output times must be positive and strictly increasing")
    if times[-1] > values["stepper.t_end"] * (1 + 1e-12):
        fail("output.times", "output times must not exceed stepper.t_end")
    if not values["mild.tol"] > 0:
        fail("mild.tol", "tol must be > 0")
    if values["mild.max_iter"] < 1:
        fail("mild.max_iter", "max_iter must be ≥ 1")
    if values["mild.samples"] < 3:
        fail("mild.samples", "samples must be ≥ 3")
    if len(values["diagnostics.center"]) != 3:
        fail("diagnostics.center", "center needs three coordinates")
    if not values["diagnostics.radius"] > 0:
        fail("diagnostics.radius", "radius must be > 0")
    if not 0 < values["diagnostics.theta"] < 1 / 3:
        fail("diagnostics.theta", "theta must lie in (0, 1/3)")
    if values["diagnostics.k_max"] < 0:
        fail("diagnostics.k_max", "k_max must be ≥ 0")
    if not 0 < values["diagnostics.gamma"] <= 1:
        fail("diagnostics.gamma", "gamma must lie in (0, 1]")
    if values["diagnostics.holder_budget"] < 0:
        fail("diagnostics.holder_budget", "holder_budget must be ≥ 0")
    if not values["diagnostics.lambda"] > 0:
        fail("diagnostics.lambda", "lambda must be > 0")
    ann = values["decay.annulus"]
    if len(ann) != 2 or not 0 < ann[0] < ann[1]:
        fail("decay.annulus", "annulus needs 0 < r_min < r_max")
    if values["decay.shells"] < 5:
        fail("decay.shells", "decay needs at least 5 shells")
    for alpha in values["decay.alphas"]:
        if min(alpha) < 0 or sum(alpha) > 2:
            fail("decay.alphas", f"multi-index {alpha} must be non-negative with |alpha| ≤ 2")
    if not values["run.output_dir"]:
        fail("run.output_dir", "output_dir must not be empty")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    values = {key: default for key, (_, default) in SCHEMA.items()}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", number)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", number)
        if key in lines:
            raise ConfigError(f"key {key!r} repeated (first set on line {lines[key]})", number)
        if not value:
            raise ConfigError(f"missing value for {key!r}", number)
        parser, _ = SCHEMA[key]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", number) from None
        lines[key] = number
    _resolve(values)
    _validate(values, lines)
    return ExperimentConfig(values, lines)


def _format(value: Any, key: str = "") -> str:
    if key == "initial.trace":
        return format_trace(value)
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple) and value and isinstance(value[0], tuple):
        return "; ".join(" ".join(str(i) for i in alpha) for alpha in value)
    if isinstance(value, tuple) and value and isinstance(value[0], float):
        return ", ".join(repr(v) for v in value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Normalized text with every key present and every default resolved."""
    lines = [f"{key} = {_format(config.values[key], key)}" for key in SCHEMA]
    return "\n".join(lines) + "\n"


def default_config(**overrides: Any) -> ExperimentConfig:
    """Defaults with ``overrides`` given as ``section__key=value`` Python values."""
    pairs = ((k.replace("__", "."), v) for k, v in overrides.items())
    text = "\n".join(f"{key} = {_format(v, key)}" for key, v in pairs)
    return parse_config(text)
