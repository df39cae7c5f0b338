"""Command-line entry point: ``lametoy <subcommand> [--config FILE] [--output DIR] [--seed N] [--quiet]``.

Exit codes: 0 success, 1 validation failure, 2 numerical abort, 3 IO failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import decay, diagnostics, selfsimilar
from .config import ConfigError, ExperimentConfig, dump_config, parse_config
from .evolution import NumericalAbort, Trajectory, evolve, mild_solve
from .models import build_initial_data
from .semigroup import lame_apply
from .snapshot import SnapshotError, SnapshotMeta, write_snapshot
from .spectral import lp_norm

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
SUBCOMMANDS = ("evolve", "mild", "semigroup", "profile", "decay", "diagnose", "selftest")


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


class Run:
    """State shared by the subcommands of one invocation."""

    def __init__(self, config: ExperimentConfig, out: Path, quiet: bool):
        self.config = config
        self.out = out
        self.quiet = quiet
        self.grid = config.grid
        self.model = config.model
        self.params = config.params
        self.u0 = build_initial_data(self.grid, config.initial_spec)

    def log(self, message: str) -> None:
        if not self.quiet:
            print(message, file=sys.stderr)

    def evolve(self, extra_times: Sequence[float] = ()) -> Trajectory:
        times = sorted(set(self.config.output_times) | set(extra_times))
        cfg = self.config.stepper
        if times[-1] > cfg.t_end * (1 + 1e-12):
            raise ConfigError(f"this subcommand needs stepper.t_end >= {times[-1]}")
        self.log(f"evolving n={self.grid.n} L={self.grid.box_length} to t={cfg.t_end}")
        return evolve(self.grid, self.u0, self.model, self.params, cfg, output_times=times)

    def meta(self, t: float) -> SnapshotMeta:
        return SnapshotMeta.for_model(self.grid.n, self.grid.box_length, self.params.kappa, t, self.model)

    def write_fields(self, times: Sequence[float], fields: Sequence[np.ndarray], prefix: str = "u") -> None:
        rows = []
        for i, (t, f) in enumerate(zip(times, fields)):
            name = f"{prefix}_{i:04d}.lmf"
            write_snapshot(f, self.meta(t), self.out / name)
            rows.append((i, t, name, lp_norm(self.grid, f, 2), lp_norm(self.grid, f, math.inf)))
        write_csv(self.out / "times.csv", ("index", "time", "file", "l2_norm", "linf_norm"), rows)


def cmd_evolve(run: Run) -> None:
    traj = run.evolve()
    run.write_fields(traj.times, traj.snapshots)
    write_csv(run.out / "info.csv", ("key", "value"), sorted(traj.info.items()))


def cmd_mild(run: Run) -> None:
    if run.model is None:
        raise ConfigError("mild needs a nonlinear model (model.variant = mod1 or mod2)")
    c = run.config
    t_end = c.output_times[-1]
    traj = mild_solve(run.grid, run.u0, run.model, run.params, t_end,
                      tol=c["mild.tol"], max_iter=c["mild.max_iter"], samples=c["mild.samples"])
    times = [0.0] + c.output_times
    try:
        fields = [traj.at(t) for t in times]
    except KeyError as exc:
        raise ConfigError(f"output time not on the Picard node grid: {exc}") from None
    run.write_fields(times, fields)
    diffs, ratios = traj.info["differences"], traj.info["ratios"]
    rows = [(i + 1, d, ratios[i - 1] if i >= 1 else float("nan")) for i, d in enumerate(diffs)]
    write_csv(run.out / "picard.csv", ("iteration", "difference", "ratio"), rows)


def cmd_semigroup(run: Run) -> None:
    times = [0.0] + run.config.output_times
    fields = [lame_apply(run.grid, run.u0, t, run.params) for t in times]
    run.write_fields(times, fields)


def cmd_profile(run: Run) -> None:
    traj = run.evolve(extra_times=(0.25, 1.0))
    U = traj.at(1.0)
    V = lame_apply(run.grid, run.u0, 1.0, run.params)
    write_snapshot(U, run.meta(1.0), run.out / "profile.lmf")
    defect = selfsimilar.self_similarity_defect(traj, 0.25, 1.0)
    rows = []
    for source, field, model in (("evolved", U, run.model), ("semigroup", V, None)):
        rep = selfsimilar.profile_residual(run.grid, field, model, run.params, source=source)
        rows.append((source, rep.radius, rep.profile_norm, rep.linear_residual_norm,
                     rep.full_residual_norm, defect.value if source == "evolved" else float("nan")))
    write_csv(run.out / "profile.csv",
              ("source", "radius", "profile_norm", "linear_residual", "full_residual", "self_similarity_defect"),
              rows)


def _alpha_tag(alpha) -> str:
    return "".join(str(a) for a in alpha)


def cmd_decay(run: Run) -> None:
    c = run.config
    traj = run.evolve(extra_times=(0.25, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        entries = decay.decay_report(traj, run.u0, run.params, c["decay.alphas"],
                                     annulus=tuple(c["decay.annulus"]), shells=c["decay.shells"])
    defect = selfsimilar.self_similarity_defect(traj, 0.25, 1.0)
    summary = []
    for e in entries:
        tag = _alpha_tag(e.alpha)
        for quantity, table, fit in (("difference", e.difference, e.difference_fit),
                                     ("profile", e.profile, e.profile_fit)):
            with np.errstate(divide="ignore"):
                logs = np.log(table.sup_values)
            write_csv(run.out / f"decay_{quantity}_a{tag}.csv", ("r", "sup", "log1p_r", "log_sup"),
                      zip(table.radii, table.sup_values, np.log1p(table.radii), logs))
            if fit is not None:
                status = "ok"
            elif quantity == "difference" and e.below_noise_floor:
                status = "below_noise_floor"
            else:
                status = "fit_rejected"
            nan = float("nan")
            summary.append((tag, quantity, fit.slope if fit else nan, fit.intercept if fit else nan,
                            fit.r2 if fit else nan, defect.value, status))
    write_csv(run.out / "summary.csv", ("alpha", "quantity", "slope", "intercept", "r2", "defect", "status"), summary)


def cmd_diagnose(run: Run) -> None:
    c = run.config
    traj = run.evolve()
    center = tuple(c["diagnostics.center"])
    lam = c["diagnostics.lambda"]
    t_last = traj.times[-1]
    e_radius = min(run.grid.box_length / 8, math.sqrt(t_last / lam))
    rep = diagnostics.apriori_quantities(traj, run.u0, e_radius, lam)
    phi, dphi = diagnostics.bump_test_function(run.grid, traj.times, center, c["diagnostics.radius"], 0.0, t_last)
    lhs, rhs = diagnostics.local_energy_terms(traj, run.model, run.params, phi, dphi)
    write_csv(run.out / "energy.csv",
              ("radius", "lambda", "alpha_R", "A_R", "ratio", "energy_sup", "dissipation_sup",
               "local_lhs", "local_rhs", "local_residual"),
              [(rep.radius, lam, rep.alpha_R, rep.A_R, rep.ratio, rep.energy_sup, rep.dissipation_sup,
                lhs, rhs, lhs - rhs)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        osc = diagnostics.oscillation_cascade(traj, center, c["diagnostics.t0"], c["diagnostics.radius"],
                                              c["diagnostics.theta"], c["diagnostics.k_max"])
    for w in caught:
        run.log(f"warning: {w.message}")
    ratios = [float("nan")] + osc.ratios
    write_csv(run.out / "oscillation.csv", ("k", "radius", "y", "ratio"),
              [(k, r, y, q) for k, (r, y, q) in enumerate(zip(osc.radii, osc.y_values, ratios))])
    cyl = diagnostics.ParabolicCylinder(center, c["diagnostics.t0"], c["diagnostics.radius"])
    est = diagnostics.holder_seminorm(traj, c["diagnostics.gamma"], cyl, c["diagnostics.holder_budget"], seed=c.seed)
    write_csv(run.out / "holder.csv", ("gamma", "budget", "seed", "estimate"),
              [(c["diagnostics.gamma"], c["diagnostics.holder_budget"], c.seed, est)])


def cmd_selftest(run: Run) -> int:
    from .selftest import run_selftest

    return run_selftest(seed=run.config.seed, quiet=run.quiet)


COMMANDS = {
    "evolve": cmd_evolve,
    "mild": cmd_mild,
    "semigroup": cmd_semigroup,
    "profile": cmd_profile,
    "decay": cmd_decay,
    "diagnose": cmd_diagnose,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lametoy", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="configuration file (flat key = value)")
    parser.add_argument("--output", help="output directory (overrides run.output_dir)")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides run.seed)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as a numerical abort
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION

    def err(message: str) -> None:
        print(f"lametoy: {message}", file=sys.stderr)

    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    except (OSError, UnicodeDecodeError) as exc:
        err(f"cannot read config: {exc}")
        return EXIT_IO
    try:
        config = parse_config(text)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            config.values["run.seed"] = args.seed
        if args.output:
            config.values["run.output_dir"] = args.output
    except ConfigError as exc:
        err(f"invalid config: {exc}")
        return EXIT_VALIDATION
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.txt").write_text(dump_config(config), encoding="utf-8")
    except OSError as exc:
        err(f"cannot prepare output directory: {exc}")
        return EXIT_IO
    try:
        run = Run(config, out, args.quiet)
        status = COMMANDS[args.subcommand](run)
    except NumericalAbort as exc:
        err(f"numerical abort: {exc}")
        return EXIT_NUMERICAL
    except (OSError, SnapshotError) as exc:
        err(f"IO failure: {exc}")
        return EXIT_IO
    except ValueError as exc:
        err(f"validation failure: {exc}")
        return EXIT_VALIDATION
    return EXIT_OK if status in (None, 0) else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
