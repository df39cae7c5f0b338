import math

import numpy as np
import pytest

from lametoy.decay import (
    DecayFitError,
    ShellTable,
    decay_report,
    default_radii,
    fit_decay,
    shell_sup,
)
from lametoy.evolution import StepperConfig, Trajectory, evolve
from lametoy.selftest import smooth_random_field
from lametoy.semigroup import LameParams
from lametoy.spectral import Grid3


def shell_max(g, values, radii):
    r, h = g.radius, g.spacing
    return np.array([values[(r >= q - h) & (r <= q + h)].max() for q in radii])


def gaussian_field(g, s2=3.0):
    f = np.exp(-np.sum(g.coords**2, axis=0) / s2)
    return np.stack([f, np.zeros_like(f), np.zeros_like(f)]), f


class TestShellSup:
    def test_zero(self):
        g = Grid3(32, 16.0)
        t = shell_sup(g, g.zeros(), (0, 0, 0), default_radii(g))
        assert np.all(t.sup_values == 0)

    def test_power_law_on_shell_points(self):
        # the max sits at the inner edge r - h, so compare with the analytic values on the shell points
        g = Grid3(64, 32.0)
        w = (1 + g.radius) ** -3.0
        u = np.stack([w, np.zeros_like(w), np.zeros_like(w)])
        radii = default_radii(g)
        t = shell_sup(g, u, (0, 0, 0), radii)
        assert np.max(np.abs(t.sup_values - shell_max(g, w, radii)) / t.sup_values) <= 1e-12
        h = g.spacing
        ratio = t.sup_values / (1 + radii) ** -3.0
        assert np.all(ratio >= 1) and np.all(ratio <= (1 + h / (1 + radii - h)) ** 3 * (1 + 1e-12))

    @pytest.mark.parametrize("alpha", [(1, 0, 0), (0, 2, 0), (1, 0, 1)])
    def test_derivatives(self, alpha):
        g = Grid3(64, 16.0)
        x = g.coords
        u, f = gaussian_field(g)
        a, b, c = (2 * xi / 3 for xi in x)
        exact = {
            (1, 0, 0): np.abs(a * f),
            (0, 2, 0): np.abs((b**2 - 2 / 3) * f),
            (1, 0, 1): np.abs(a * c * f),
        }[alpha]
        radii = default_radii(g)
        t = shell_sup(g, u, alpha, radii)
        assert np.max(np.abs(t.sup_values - shell_max(g, exact, radii))) <= 1e-8

    def test_radially_decreasing(self):
        g = Grid3(32, 16.0)
        u, _ = gaussian_field(g, 20.0)
        t = shell_sup(g, u, (0, 0, 0), default_radii(g))
        assert np.all(np.diff(t.sup_values) < 0)

    def test_permutation_symmetry(self, rng):
        g = Grid3(24, 12.0)
        u = smooth_random_field(g, rng, 4)
        # w(x) = P u(P^T x) for the cyclic permutation x1 -> x2 -> x3
        w = np.transpose(u[[2, 0, 1]], (0, 3, 1, 2))
        radii = default_radii(g, (2.0, 4.5), 6)
        a = shell_sup(g, u, (1, 0, 1), radii).sup_values
        b = shell_sup(g, w, (1, 1, 0), radii).sup_values
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(a)

    @pytest.mark.parametrize("radii,match", [
        ([0.5, 2.0], "radii must lie"),
        ([2.0, 15.9], "radii must lie"),
        ([3.0, 2.0], "increasing"),
    ])
    def test_rejects_radii(self, radii, match):
        g = Grid3(32, 32.0)
        with pytest.raises(ValueError, match=match):
            shell_sup(g, g.zeros(), (0, 0, 0), radii)

    def test_rejects_alpha(self):
        g = Grid3(32, 32.0)
        with pytest.raises(ValueError, match="alpha"):
            shell_sup(g, g.zeros(), (2, 1, 0), [4.0])


class TestFit:
    @pytest.mark.parametrize("p", [-3.0, -1.0, -2.5])
    def test_exact_power_laws(self, p):
        r = np.geomspace(2.0, 8.0, 12)
        fit = fit_decay(ShellTable(r, 0.7 * (1 + r) ** p, (0, 0, 0), (2.0, 8.0)))
        assert fit.slope == pytest.approx(p, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(0.7), abs=1e-10)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)

    def test_noisy_r2_below_one(self, rng):
        r = np.geomspace(2.0, 8.0, 12)
        v = (1 + r) ** -3.0 * np.exp(0.3 * rng.standard_normal(12))
        fit = fit_decay(ShellTable(r, v, (0, 0, 0), (2.0, 8.0)))
        assert 0 <= fit.r2 < 1

    def test_zero_shells_dropped_with_warning(self):
        r = np.geomspace(2.0, 8.0, 8)
        v = (1 + r) ** -2.0
        v[[1, 4]] = 0.0
        with pytest.warns(UserWarning, match="2 shell"):
            fit = fit_decay(ShellTable(r, v, (0, 0, 0), (2.0, 8.0)))
        assert fit.slope == pytest.approx(-2.0, abs=1e-10)

    def test_too_few_shells(self):
        r = np.geomspace(2.0, 8.0, 4)
        with pytest.raises(DecayFitError, match="at least 5"):
            fit_decay(ShellTable(r, (1 + r) ** -2.0, (0, 0, 0), (2.0, 8.0)))


class TestReport:
    def test_zero_trajectory(self):
        g = Grid3(32, 32.0)
        traj = Trajectory.stationary(g, g.zeros(), [0.0, 1.0])
        with pytest.warns(UserWarning):
            (entry,) = decay_report(traj, g.zeros(), LameParams(), [(0, 0, 0)])
        assert entry.below_noise_floor and entry.difference_fit is None and entry.profile_fit is None
        assert any("noise floor" in n for n in entry.notes)

    def test_linear_run_below_noise_floor(self, rng):
        g = Grid3(32, 32.0)
        u0, _ = gaussian_field(g, 20.0)
        p = LameParams(1.0)
        traj = evolve(g, u0, None, p, StepperConfig(1.0, dt=0.25))
        entries = decay_report(traj, u0, p, [(0, 0, 0), (1, 0, 0)])
        assert all(e.below_noise_floor and e.difference_fit is None for e in entries)
        assert entries[0].profile_fit is not None and entries[0].profile_fit.slope < 0

    def test_shells_option(self):
        g = Grid3(32, 32.0)
        u0, _ = gaussian_field(g, 20.0)
        traj = Trajectory.stationary(g, u0, [0.0, 1.0])
        (entry,) = decay_report(traj, u0, LameParams(), [(0, 0, 0)], annulus=(4.0, 8.0), shells=7)
        assert len(entry.profile.radii) == 7 and entry.profile.annulus == (4.0, 8.0)

    def test_requires_time_one(self, grid2pi):
        traj = Trajectory.stationary(grid2pi, grid2pi.zeros(), [0.0, 0.5])
        with pytest.raises(ValueError, match="t = 1"):
            decay_report(traj, grid2pi.zeros(), LameParams(), [(0, 0, 0)])
