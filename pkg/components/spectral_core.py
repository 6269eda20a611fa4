"""Periodic computational box, discrete Fourier transform contract and the
Fourier multipliers of the mixed operator L = -Laplacian + (-Laplacian)^s.

Conventions (the only place they are defined, every other module uses them):

* The box is [-R, R)^N sampled with n points per axis, spacing dx = 2R/n,
  x_j = -R + j*dx.  The origin x = 0 sits at index n/2 on every axis.
* Wavenumbers are xi_k = pi*k/R for k in [-n/2, n/2), stored in FFT order
  (``2*pi*fftfreq(n, dx)``).
* forward:  F_k = dx^N * sum_j f_j exp(-i xi_k . x_j)
  inverse:  f_j = (2R)^-N * sum_k F_k exp(+i xi_k . x_j)
  so a unit-mass kernel has zero mode exactly 1 and a multiplier m(xi) maps to
  the kernel ``inverse(m)``.  Plancherel reads
  sum_k |F_k|^2 / (2R)^N = sum_j |f_j|^2 dx^N.
* Convolution on the box: (a * b)(x_j) = sum_l a(x_j - y_l) b(y_l) dx^N,
  computed as ``inverse(forward(a) * forward(b))``.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
import scipy.fft

from components.errors import ValidationError, require

logger = logging.getLogger(__name__)

# ============================================================================
# Defaults and tolerances
# ============================================================================

DEFAULT_POINTS = {1: 1024, 2: 256, 3: 64}
MIN_POINTS = 8
MAX_TOTAL_POINTS = 2**27
SYMMETRY_TOLERANCE = 1e-10

# Passed to scipy.fft as ``workers``; per-axis transforms are computed
# identically whatever the thread count.
FFT_WORKERS = 1


# ============================================================================
# Types
# ============================================================================


@dataclass(frozen=True)
class GridSpec:
    """Truncated periodic box [-R, R)^N with n points per axis."""

    dimension: int = 1
    half_length: float = 40.0
    points: Optional[int] = None

    def __post_init__(self):
        points = self.points
        if points is None and self.dimension in DEFAULT_POINTS:
            points = DEFAULT_POINTS[self.dimension]
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "half_length", float(self.half_length))
        require(
            [
                (self.dimension in (1, 2, 3), f"dimension must be 1, 2 or 3 (got {self.dimension})"),
                (self.half_length > 0, f"half_length must be > 0 (got {self.half_length})"),
                (
                    isinstance(points, (int, np.integer)) and points >= MIN_POINTS and points % 2 == 0,
                    f"points must be an even integer >= {MIN_POINTS} (got {points})",
                ),
            ],
            "GridSpec",
        )
        if points ** self.dimension > MAX_TOTAL_POINTS:
            raise ValidationError(
                f"GridSpec: {points}^{self.dimension} points exceed the limit of {MAX_TOTAL_POINTS}"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def box_volume(self) -> float:
        return (2.0 * self.half_length) ** self.dimension

    @property
    def origin_index(self) -> Tuple[int, ...]:
        return (self.points // 2,) * self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        """1-D coordinates -R + j*dx, written as (j - n/2)*dx so that mirrored
        points are exact negatives of each other."""
        x = (np.arange(self.points) - self.points // 2) * self.spacing
        x.setflags(write=False)
        return x

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """1-D wavenumbers pi*k/R in FFT order."""
        xi = 2.0 * np.pi * scipy.fft.fftfreq(self.points, d=self.spacing)
        xi.setflags(write=False)
        return xi

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """|x| at every grid point."""
        r = np.sqrt(sum(c**2 for c in self.coordinates()))
        r.setflags(write=False)
        return r

    @cached_property
    def wavenumber_magnitude(self) -> np.ndarray:
        """|xi| at every wavenumber, FFT order."""
        grids = np.meshgrid(*([self.axis_wavenumbers] * self.dimension), indexing="ij")
        xi = np.sqrt(sum(g**2 for g in grids))
        xi.setflags(write=False)
        return xi

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same box, ``factor`` times more points per axis."""
        return GridSpec(self.dimension, self.half_length, self.points * factor)

    def rescaled(self, factor: float) -> "GridSpec":
        """Same point count, half-length multiplied by ``factor``."""
        return GridSpec(self.dimension, self.half_length * factor, self.points)

    def describe(self) -> dict:
        return {"N": self.dimension, "R": self.half_length, "n": self.points}


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Field:
    """Real samples on every grid point."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values, np.float64)
        if values.shape != self.grid.shape:
            raise ValidationError(f"Field: values of shape {values.shape} on a grid of shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise ValidationError(f"Field: {bad} non-finite value(s)")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: GridSpec, function) -> "Field":
        """Sample ``function(*coordinates)`` on the grid."""
        return cls(grid, np.broadcast_to(function(*grid.coordinates()), grid.shape))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def at_origin(self) -> float:
        return float(self.values[self.grid.origin_index])

    def scaled(self, factor: float) -> "Field":
        return Field(self.grid, factor * self.values)


@dataclass(frozen=True)
class SpectrumField:
    """Fourier coefficients in FFT order."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        coefficients = _frozen(self.coefficients, np.complex128)
        if coefficients.shape != self.grid.shape:
            raise ValidationError(
                f"SpectrumField: coefficients of shape {coefficients.shape} on a grid of shape {self.grid.shape}"
            )
        object.__setattr__(self, "coefficients", coefficients)

    def symmetry_defect(self) -> float:
        """Relative max |F(xi) - conj(F(-xi))|."""
        return conjugate_symmetry_defect(self.coefficients)

    def zero_mode(self) -> complex:
        return complex(self.coefficients[(0,) * self.grid.dimension])


# ============================================================================
# Raw array transforms (used in inner loops where wrapping every
# intermediate into a Field would only add copies)
# ============================================================================


def reflect(coefficients: np.ndarray) -> np.ndarray:
    """Return F(-xi) for an array in FFT order."""
    out = np.flip(coefficients)
    return np.roll(out, 1, axis=tuple(range(out.ndim)))


def conjugate_symmetry_defect(coefficients: np.ndarray) -> float:
    scale = float(np.max(np.abs(coefficients))) if coefficients.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coefficients - np.conj(reflect(coefficients)))) / scale)


def forward_array(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.fftn(scipy.fft.ifftshift(values), workers=FFT_WORKERS) * grid.cell_volume


def inverse_array(coefficients: np.ndarray, grid: GridSpec) -> np.ndarray:
    return scipy.fft.fftshift(scipy.fft.ifftn(coefficients, workers=FFT_WORKERS).real) / grid.cell_volume


def apply_multiplier_array(values: np.ndarray, multiplier: np.ndarray, grid: GridSpec) -> np.ndarray:
    """inverse(forward(values) * multiplier) on raw arrays."""
    return scipy.fft.fftshift(
        scipy.fft.ifftn(scipy.fft.fftn(scipy.fft.ifftshift(values), workers=FFT_WORKERS) * multiplier,
                        workers=FFT_WORKERS).real
    )


# ============================================================================
# Transform contract
# ============================================================================


def forward_transform(f: Field) -> SpectrumField:
    """Field -> SpectrumField with the dx^N volume element (see module docstring)."""
    if not np.all(np.isfinite(f.values)):
        raise ValidationError("forward_transform: non-finite input")
    return SpectrumField(f.grid, forward_array(f.values, f.grid))


def inverse_transform(spectrum: SpectrumField, tolerance: float = SYMMETRY_TOLERANCE) -> Field:
    """SpectrumField -> real Field; rejects spectra that do not represent a real field."""
    defect = spectrum.symmetry_defect()
    if defect > tolerance:
        raise ValidationError(
            f"inverse_transform: spectrum is not conjugate-symmetric (relative defect {defect:.3e} > {tolerance:.1e})"
        )
    return Field(spectrum.grid, inverse_array(spectrum.coefficients, spectrum.grid))


# ============================================================================
# Symbols
# ============================================================================


def check_order(s: float) -> None:
    if not (0.0 < s < 1.0):
        raise ValidationError(f"order s must lie in (0, 1) (got {s})")


def _check_time(t: float) -> None:
    if not (np.isfinite(t) and t >= 0.0):
        raise ValidationError(f"time must be finite and >= 0 (got {t})")


def mixed_exponent(grid: GridSpec, s: float) -> np.ndarray:
    """|xi|^2 + |xi|^{2s}; zero at the zero mode."""
    xi = grid.wavenumber_magnitude
    return xi**2 + xi ** (2.0 * s)


def symbol(grid: GridSpec, s: float, t: float) -> SpectrumField:
    """exp(-t(|xi|^2 + |xi|^{2s})).

    Entries lie in [0, 1] and are nonincreasing in |xi|; the zero mode is
    exactly 1.  Very large t|xi|^2 underflows to 0.
    """
    check_order(s)
    _check_time(t)
    return SpectrumField(grid, np.exp(-t * mixed_exponent(grid, s)))


def symbol_fractional(grid: GridSpec, s: float, t: float) -> SpectrumField:
    """exp(-t|xi|^{2s})."""
    check_order(s)
    _check_time(t)
    return SpectrumField(grid, np.exp(-t * grid.wavenumber_magnitude ** (2.0 * s)))


def symbol_local(grid: GridSpec, t: float) -> SpectrumField:
    """exp(-t|xi|^2)."""
    _check_time(t)
    return SpectrumField(grid, np.exp(-t * grid.wavenumber_magnitude**2))


# ============================================================================
# Operator application
# ============================================================================


def apply_fractional_laplacian(f: Field, s: float) -> Field:
    """(-Laplacian)^s f evaluated spectrally."""
    check_order(s)
    return Field(f.grid, apply_multiplier_array(f.values, f.grid.wavenumber_magnitude ** (2.0 * s), f.grid))


def apply_laplacian(f: Field) -> Field:
    """-Laplacian f evaluated spectrally (note the sign: symbol |xi|^2)."""
    return Field(f.grid, apply_multiplier_array(f.values, f.grid.wavenumber_magnitude**2, f.grid))


def apply_mixed_operator(f: Field, s: float) -> Field:
    """L f = -Laplacian f + (-Laplacian)^s f."""
    check_order(s)
    return Field(f.grid, apply_multiplier_array(f.values, mixed_exponent(f.grid, s), f.grid))


def convolve(a: Field, b: Field) -> Field:
    """Periodic convolution with the dx^N quadrature weight."""
    if a.grid != b.grid:
        raise ValidationError("convolve: fields live on different grids")
    product = forward_array(a.values, a.grid) * forward_array(b.values, b.grid)
    return Field(a.grid, inverse_array(product, a.grid))
