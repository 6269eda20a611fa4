import numpy as np
import pytest

from components.errors import ValidationError
from components.spectral_core import (
    Field,
    GridSpec,
    SpectrumField,
    apply_fractional_laplacian,
    apply_laplacian,
    apply_mixed_operator,
    convolve,
    forward_transform,
    inverse_transform,
    reflect,
    symbol,
    symbol_fractional,
    symbol_local,
)


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape))


def _gaussian(grid, t=1.0):
    N = grid.dimension
    return Field(grid, (4 * np.pi * t) ** (-N / 2) * np.exp(-grid.radius**2 / (4 * t)))


# ----------------------------------------------------------------------------
# GridSpec
# ----------------------------------------------------------------------------


def test_grid_defaults_per_dimension():
    assert GridSpec(1).points == 1024
    assert GridSpec(2).points == 256
    assert GridSpec(3).points == 64


def test_grid_axis_has_origin_at_half_index():
    grid = GridSpec(1, 10.0, 16)
    assert grid.spacing == pytest.approx(1.25)
    assert grid.axis[0] == -10.0
    assert grid.axis[grid.points // 2] == 0.0
    # mirrored points are exact negatives; -R is its own periodic mirror
    assert np.array_equal(reflect(grid.axis)[1:], -grid.axis[1:])


def test_grid_wavenumbers_are_pi_k_over_R():
    grid = GridSpec(1, 5.0, 8)
    k = np.array([0, 1, 2, 3, -4, -3, -2, -1])
    assert np.allclose(grid.axis_wavenumbers, np.pi * k / 5.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dimension": 4},
        {"half_length": 0.0},
        {"points": 7},
        {"points": 6},
        {"dimension": 3, "points": 1024},
    ],
)
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValidationError):
        GridSpec(**kwargs)


def test_grid_collects_all_problems():
    with pytest.raises(ValidationError) as info:
        GridSpec(5, -1.0, 7)
    assert len(info.value.errors) == 3


def test_field_rejects_non_finite_values():
    grid = GridSpec(1, 1.0, 8)
    values = np.zeros(8)
    values[3] = np.nan
    with pytest.raises(ValidationError):
        Field(grid, values)


def test_field_values_are_read_only():
    field = Field.constant(GridSpec(1, 1.0, 8), 2.0)
    with pytest.raises(ValueError):
        field.values[0] = 1.0


# ----------------------------------------------------------------------------
# Transforms
# ----------------------------------------------------------------------------


def test_constant_field_has_only_the_zero_mode():
    grid = GridSpec(1, 3.0, 32)
    spectrum = forward_transform(Field.constant(grid, 1.0))
    assert spectrum.zero_mode() == pytest.approx(2 * 3.0)
    others = np.abs(spectrum.coefficients[1:])
    assert np.max(others) < 1e-12


def test_single_cosine_mode_gives_two_coefficients():
    R = 4.0
    grid = GridSpec(1, R, 64)
    spectrum = forward_transform(Field.from_function(grid, lambda x: np.cos(np.pi * x / R)))
    magnitude = np.abs(spectrum.coefficients)
    nonzero = np.flatnonzero(magnitude > 1e-10 * magnitude.max())
    assert list(nonzero) == [1, 63]
    assert spectrum.coefficients[1].real == pytest.approx(R)


@pytest.mark.parametrize("dimension, points", [(1, 128), (2, 32), (3, 16)])
def test_round_trip_identity(dimension, points):
    grid = GridSpec(dimension, 5.0, points)
    f = _random_field(grid, seed=dimension)
    back = inverse_transform(forward_transform(f))
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))


@pytest.mark.parametrize("dimension, points", [(1, 128), (2, 32), (3, 16)])
def test_plancherel(dimension, points):
    grid = GridSpec(dimension, 3.0, points)
    f = _random_field(grid, seed=10 + dimension)
    spectrum = forward_transform(f)
    lhs = np.sum(np.abs(spectrum.coefficients) ** 2) / grid.box_volume
    rhs = np.sum(f.values**2) * grid.cell_volume
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_inverse_of_zero_spectrum_is_zero():
    grid = GridSpec(2, 1.0, 8)
    field = inverse_transform(SpectrumField(grid, np.zeros(grid.shape)))
    assert np.all(field.values == 0.0)


def test_inverse_of_zero_mode_is_constant():
    grid = GridSpec(1, 2.0, 16)
    coefficients = np.zeros(grid.shape, dtype=complex)
    coefficients[0] = 3.0
    field = inverse_transform(SpectrumField(grid, coefficients))
    assert np.allclose(field.values, 3.0 / grid.box_volume, rtol=1e-14)


def test_inverse_of_gaussian_symbol_is_gaussian(grid):
    spectrum = symbol_local(grid, 1.0)
    field = inverse_transform(spectrum)
    expected = _gaussian(grid, 1.0).values
    assert np.max(np.abs(field.values - expected)) < 1e-10


def test_inverse_rejects_asymmetric_spectrum():
    grid = GridSpec(1, 1.0, 16)
    coefficients = np.zeros(grid.shape, dtype=complex)
    coefficients[1] = 1.0
    with pytest.raises(ValidationError, match="conjugate-symmetric"):
        inverse_transform(SpectrumField(grid, coefficients))


# ----------------------------------------------------------------------------
# Symbols
# ----------------------------------------------------------------------------


def test_symbol_at_time_zero_is_all_ones(grid):
    assert np.all(symbol(grid, 0.3, 0.0).coefficients == 1.0)


def test_symbol_zero_mode_is_one(grid):
    assert symbol(grid, 0.7, 5.0).zero_mode() == 1.0


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_symbol_at_unit_wavenumber(s):
    grid = GridSpec(1, np.pi, 8)
    assert symbol(grid, s, 1.0).coefficients[1].real == pytest.approx(np.exp(-2.0), rel=1e-14)


def test_symbol_local_at_wavenumber_two():
    grid = GridSpec(1, np.pi / 2, 8)
    assert symbol_local(grid, 0.5).coefficients[1].real == pytest.approx(np.exp(-2.0), rel=1e-14)


def test_symbol_is_product_of_its_factors():
    grid = GridSpec(2, 7.3, 32)
    product = symbol_fractional(grid, 0.35, 0.8).coefficients * symbol_local(grid, 0.8).coefficients
    assert np.allclose(product, symbol(grid, 0.35, 0.8).coefficients, rtol=0, atol=1e-14)


def test_symbol_semigroup():
    grid = GridSpec(1, 10.0, 256)
    lhs = symbol(grid, 0.6, 1.3).coefficients
    rhs = symbol(grid, 0.6, 0.5).coefficients * symbol(grid, 0.6, 0.8).coefficients
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14)


def test_symbol_entries_in_unit_interval_and_monotone(grid):
    values = symbol(grid, 0.4, 0.01).coefficients.real.ravel()
    xi = grid.wavenumber_magnitude.ravel()
    assert np.all(values > 0) and np.all(values <= 1)
    ordered = values[np.argsort(xi, kind="stable")]
    assert np.all(np.diff(ordered) <= 0)


def test_fractional_symbol_near_one_matches_local():
    grid = GridSpec(1, 10.0, 256)
    low = grid.wavenumber_magnitude <= 4
    fractional = symbol_fractional(grid, 0.999, 1.0).coefficients.real
    local = symbol_local(grid, 1.0).coefficients.real
    assert np.max(np.abs(fractional - local)[low]) < 1e-2


@pytest.mark.parametrize("s", [0.0, 1.0, 1.5, -0.2])
def test_symbol_rejects_order_outside_unit_interval(grid, s):
    with pytest.raises(ValidationError):
        symbol(grid, s, 1.0)


def test_symbol_rejects_negative_time(grid):
    with pytest.raises(ValidationError):
        symbol(grid, 0.5, -1.0)


# ----------------------------------------------------------------------------
# Operators
# ----------------------------------------------------------------------------


def test_laplacian_of_cosine():
    R = 5.0
    grid = GridSpec(1, R, 64)
    k = 3 * np.pi / R
    f = Field.from_function(grid, lambda x: np.cos(k * x))
    assert np.allclose(apply_laplacian(f).values, k**2 * f.values, atol=1e-10)
    assert np.allclose(apply_fractional_laplacian(f, 0.3).values, k**0.6 * f.values, atol=1e-10)
    assert np.allclose(apply_mixed_operator(f, 0.3).values, (k**2 + k**0.6) * f.values, atol=1e-10)


def test_operators_annihilate_constants():
    grid = GridSpec(2, 3.0, 16)
    f = Field.constant(grid, 2.5)
    assert np.max(np.abs(apply_mixed_operator(f, 0.5).values)) < 1e-12


def test_convolution_of_gaussians(grid):
    result = convolve(_gaussian(grid, 0.5), _gaussian(grid, 0.7))
    assert np.max(np.abs(result.values - _gaussian(grid, 1.2).values)) < 1e-12


def test_convolution_requires_same_grid():
    with pytest.raises(ValidationError):
        convolve(Field.constant(GridSpec(1, 1.0, 8), 1.0), Field.constant(GridSpec(1, 2.0, 8), 1.0))
