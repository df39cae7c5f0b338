"""Periodic-grid vector calculus on the cube [-L/2, L/2)^3.

Fields are plain numpy arrays: a scalar field has shape ``(n, n, n)`` and a
vector field has shape ``(3, n, n, n)``, indexed ``[x1, x2, x3]`` (``ij``
indexing). Spectral coefficients use the normalization

    f_hat(k) = (1/n^3) * sum_x f(x) exp(-i k.x)

so that ``cos(2 pi x1 / L)`` has coefficient 1/2 at ``k = (+-2 pi / L, 0, 0)``
and Parseval reads ``mean(f**2) == sum(|f_hat|**2)``.

First derivatives use the wavenumber with the Nyquist entry zeroed (the usual
convention for odd derivatives of real data on even grids); the Laplacian
uses the full ``|k|^2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

THREADS_ENV = "LAMETOY_THREADS"


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic cubic grid with ``n`` points per axis on a box of side ``box_length``."""

    n: int
    box_length: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not (np.isfinite(self.box_length) and self.box_length > 0):
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @cached_property
    def axis(self) -> np.ndarray:
        """1D coordinates -L/2 + j*h; index n/2 sits exactly at the origin."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Centered coordinates, shape (3, n, n, n)."""
        return np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coords**2, axis=0))

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Signed integer mode numbers in FFT order, -n/2 .. n/2-1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)

    @cached_property
    def k1d(self) -> np.ndarray:
        return 2.0 * np.pi / self.box_length * self.mode_index

    @cached_property
    def kd1d(self) -> np.ndarray:
        kd = self.k1d.copy()
        kd[self.n // 2] = 0.0
        return kd

    @cached_property
    def kvec(self) -> np.ndarray:
        """Derivative wavenumbers (Nyquist zeroed), shape (3, n, n, n)."""
        return np.stack(np.meshgrid(self.kd1d, self.kd1d, self.kd1d, indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        """Full |k|^2 used by the Laplacian and the heat multipliers."""
        k = self.k1d**2
        return k[:, None, None] + k[None, :, None] + k[None, None, :]

    @cached_property
    def kd2(self) -> np.ndarray:
        """|k|^2 built from the derivative wavenumbers."""
        return np.sum(self.kvec**2, axis=0)

    @cached_property
    def inv_kd2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            inv = np.where(self.kd2 > 0, 1.0 / np.where(self.kd2 > 0, self.kd2, 1.0), 0.0)
        return inv

    @cached_property
    def origin_phase(self) -> np.ndarray:
        """(-1)^(m1+m2+m3): moves FFT coefficients from index origin to x = 0."""
        sign = np.where(self.mode_index % 2 == 0, 1.0, -1.0)
        return sign[:, None, None] * sign[None, :, None] * sign[None, None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with |m| < n/3 on every axis."""
        keep = np.abs(self.mode_index) < self.n / 3.0
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    def zeros(self, components: int | None = 3) -> np.ndarray:
        if components is None:
            return np.zeros(self.shape)
        return np.zeros((components, *self.shape))

    def ball_mask(self, radius: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
        """Grid-point indicator of the ball (no periodic wrap)."""
        c = np.asarray(center, dtype=float).reshape(3, 1, 1, 1)
        return np.sum((self.coords - c) ** 2, axis=0) < radius**2


def check_finite(values: np.ndarray, what: str = "field") -> np.ndarray:
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
        raise ValueError(f"{what} contains {bad} non-finite value(s)")
    return values


def _check_shape(grid: Grid3, values: np.ndarray, vector: bool) -> None:
    want = (3, *grid.shape) if vector else grid.shape
    if values.shape != want:
        raise ValueError(f"expected shape {want}, got {values.shape}")


# -- transforms -------------------------------------------------------------


def fft(values: np.ndarray) -> np.ndarray:
    """Forward transform over the last three axes with 1/n^3 normalization."""
    return scipy.fft.fftn(values, axes=(-3, -2, -1), norm="forward", workers=_workers())


def ifft(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft`; returns the real part (fields are real)."""
    return scipy.fft.ifftn(coeffs, axes=(-3, -2, -1), norm="forward", workers=_workers()).real


def transform(grid: Grid3, values: np.ndarray, direction: str = "forward") -> np.ndarray:
    """3D DFT of a scalar or vector field in either direction.

    Coefficients refer to exp(i k.x) with x the centered coordinate, so
    ``cos(2 pi x1 / L)`` maps to 1/2 at ``k = (+-2 pi / L, 0, 0)``.
    ``inverse(forward(f)) == f`` to roundoff. Non-finite input is rejected.
    """
    check_finite(values)
    if direction == "forward":
        return fft(values) * grid.origin_phase
    if direction == "inverse":
        return scipy.fft.ifftn(
            values * grid.origin_phase, axes=(-3, -2, -1), norm="forward", workers=_workers()
        )
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def dealias(grid: Grid3, coeffs: np.ndarray) -> np.ndarray:
    return coeffs * grid.dealias_mask


# -- differential operators -------------------------------------------------


def gradient(grid: Grid3, f: np.ndarray) -> np.ndarray:
    check_finite(f)
    _check_shape(grid, f, vector=False)
    fh = fft(f)
    return ifft(1j * grid.kvec * fh)


def divergence(grid: Grid3, u: np.ndarray) -> np.ndarray:
    check_finite(u)
    _check_shape(grid, u, vector=True)
    return ifft(spectral_divergence(grid, fft(u)))


def curl(grid: Grid3, u: np.ndarray) -> np.ndarray:
    check_finite(u)
    _check_shape(grid, u, vector=True)
    return ifft(spectral_curl(grid, fft(u)))


def laplacian(grid: Grid3, f: np.ndarray) -> np.ndarray:
    """Spectral Laplacian of a scalar or (componentwise) vector field."""
    check_finite(f)
    return ifft(-grid.k2 * fft(f))


def spectral_divergence(grid: Grid3, uh: np.ndarray) -> np.ndarray:
    return 1j * np.sum(grid.kvec * uh, axis=0)


def spectral_curl(grid: Grid3, uh: np.ndarray) -> np.ndarray:
    k = grid.kvec
    return 1j * np.stack(
        [
            k[1] * uh[2] - k[2] * uh[1],
            k[2] * uh[0] - k[0] * uh[2],
            k[0] * uh[1] - k[1] * uh[0],
        ]
    )


def derivative(grid: Grid3, f: np.ndarray, alpha: tuple[int, int, int]) -> np.ndarray:
    """Spectral mixed partial derivative d^alpha of a scalar or vector field."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != 3 or min(alpha) < 0:
        raise ValueError(f"alpha must be a multi-index of three non-negative ints, got {alpha}")
    if sum(alpha) == 0:
        return np.array(f, dtype=float, copy=True)
    mult = np.ones(grid.shape, dtype=complex)
    for axis, order in enumerate(alpha):
        if order:
            mult = mult * (1j * grid.kvec[axis]) ** order
    return ifft(mult * fft(f))


# -- Helmholtz decomposition ------------------------------------------------


@dataclass(frozen=True)
class HelmholtzParts:
    """Solenoidal part, gradient part and scalar potential with gradient = grad(potential)."""

    solenoidal: np.ndarray
    gradient: np.ndarray
    potential: np.ndarray


def gradient_projection(grid: Grid3, uh: np.ndarray) -> np.ndarray:
    """Spectral gradient part (k.u_hat / |k|^2) k; modes with k = 0 map to 0."""
    kdotu = np.sum(grid.kvec * uh, axis=0)
    return grid.kvec * (kdotu * grid.inv_kd2)


def helmholtz_decompose(grid: Grid3, u: np.ndarray) -> HelmholtzParts:
    """Split u into a divergence-free part and a gradient ``grad q0`` with ``lap q0 = div u``.

    The mean mode stays in the solenoidal part.
    """
    check_finite(u)
    _check_shape(grid, u, vector=True)
    uh = fft(u)
    gh = gradient_projection(grid, uh)
    # q0_hat = -i (k.u_hat)/|k|^2 so that i k q0_hat = gh
    qh = -1j * np.sum(grid.kvec * uh, axis=0) * grid.inv_kd2
    grad_part = ifft(gh)
    return HelmholtzParts(solenoidal=u - grad_part, gradient=grad_part, potential=ifft(qh))


# -- norms and quadrature ---------------------------------------------------


def pointwise_magnitude(f: np.ndarray) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim == 4:
        return np.sqrt(np.sum(f**2, axis=0))
    return np.abs(f)


def lp_norm(grid: Grid3, f: np.ndarray, p: float = 2.0, region: np.ndarray | None = None) -> float:
    """Midpoint-rule L^p norm of a scalar or vector field (Euclidean pointwise magnitude).

    ``region`` is an optional boolean grid mask (e.g. from :meth:`Grid3.ball_mask`);
    restricting to a ball this way is first-order accurate at the boundary.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = pointwise_magnitude(f)
    if region is not None:
        mag = mag[region]
    if mag.size == 0:
        return 0.0
    if np.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def integrate(grid: Grid3, f: np.ndarray, region: np.ndarray | None = None) -> float | np.ndarray:
    """Midpoint-rule box integral; vector fields integrate componentwise."""
    f = np.asarray(f)
    if region is not None:
        return np.sum(f[..., region], axis=-1) * grid.cell_volume
    return np.sum(f, axis=(-3, -2, -1)) * grid.cell_volume


def inner(grid: Grid3, u: np.ndarray, v: np.ndarray) -> float:
    """L2 inner product over the box."""
    return float(np.sum(u * v) * grid.cell_volume)


# -- trigonometric interpolation ---------------------------------------------


def _interp_matrix(grid: Grid3, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the 1D trigonometric interpolant at ``points``.

    The Nyquist mode is taken as cos(k_N (y + L/2)), which is real and reproduces
    the nodes exactly.
    """
    y = np.asarray(points, dtype=float)[:, None] + 0.5 * grid.box_length
    k = grid.k1d[None, :]
    mat = np.exp(1j * k * y)
    nyq = grid.n // 2
    mat[:, nyq] = np.cos(grid.k1d[nyq] * y[:, 0])
    return mat


def interpolate(grid: Grid3, f: np.ndarray, points_1d: tuple[np.ndarray, np.ndarray, np.ndarray]) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` on a tensor product of 1D point sets."""
    # Coefficients relative to the grid origin -L/2 so the matrices use y = x + L/2.
    coeffs = scipy.fft.fftn(f, axes=(-3, -2, -1), norm="forward", workers=_workers())
    a, b, c = (_interp_matrix(grid, p) for p in points_1d)
    out = np.einsum("ai,...ijk->...ajk", a, coeffs, optimize=True)
    out = np.einsum("bj,...ajk->...abk", b, out, optimize=True)
    out = np.einsum("ck,...abk->...abc", c, out, optimize=True)
    return out.real
