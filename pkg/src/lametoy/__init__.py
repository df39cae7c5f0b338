"""Pseudo-spectral tools for two toy Navier-Stokes models with a Lamé linear part."""

from .config import ConfigError, ExperimentConfig, dump_config, parse_config
from .decay import DecayFit, ShellTable, decay_report, fit_decay, shell_sup
from .diagnostics import (
    EnergyReport,
    OscillationReport,
    ParabolicCylinder,
    apriori_quantities,
    cylinder_mean,
    holder_seminorm,
    local_energy_residual,
    oscillation_cascade,
    oscillation_y,
)
from .evolution import (
    BlowUpError,
    ContractionError,
    NumericalAbort,
    Scheme,
    StepperConfig,
    Trajectory,
    evolve,
    mild_solve,
)
from .models import InitialDataSpec, ModelKind, PressureLaw, Variant, build_initial_data, nonlinearity
from .selfsimilar import profile_residual, rescale, self_similarity_defect
from .semigroup import LameParams, heat_kernel, lame_apply, lame_solve_divforce, lame_solve_force
from .snapshot import SnapshotMeta, read_snapshot, write_snapshot
from .spectral import Grid3, helmholtz_decompose, transform

__version__ = "0.1.0"
