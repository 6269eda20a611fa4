import numpy as np
import pytest

from components.errors import ValidationError
from components.heat_kernels import ModelParams, gauss_kernel, mixed_kernel
from components.spectral_core import GridSpec
from components.stochastic_oracle import (
    MIN_SAMPLES,
    EmpiricalDensity,
    SamplerConfig,
    characteristic_function_check,
    compare_density,
    ks_critical_value,
    radial_cdf,
    sample_from_kernel,
    sample_mixed_process,
    sample_stable,
)


def test_stable_samples_at_time_zero_are_zero():
    assert np.all(sample_stable(0.5, 0.0, 100, seed=1) == 0.0)
    assert sample_stable(0.5, 0.0, 100, seed=1, dimension=2).shape == (100, 2)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_stable_characteristic_function_one_dimension(s):
    samples = sample_stable(s, 1.0, 200_000, seed=11)
    for row in characteristic_function_check(samples, s, 1.0):
        assert abs(row["z"]) < 3, row


@pytest.mark.parametrize("dimension", [2, 3])
def test_stable_characteristic_function_isotropic(dimension):
    samples = sample_stable(0.5, 0.7, 200_000, seed=5, dimension=dimension)
    assert samples.shape == (200_000, dimension)
    for direction in range(dimension):
        for row in characteristic_function_check(samples, 0.5, 0.7, direction=direction):
            assert abs(row["z"]) < 3, row


def test_sampling_does_not_depend_on_worker_count():
    one = sample_stable(0.6, 1.0, 10_500, seed=3, chunk_size=1000, workers=1)
    three = sample_stable(0.6, 1.0, 10_500, seed=3, chunk_size=1000, workers=3)
    assert np.array_equal(one, three)

    a = sample_mixed_process(0.6, 1.0, 20_000, seed=3, chunk_size=1000, workers=1)
    b = sample_mixed_process(0.6, 1.0, 20_000, seed=3, chunk_size=1000, workers=3)
    assert np.array_equal(a.probabilities, b.probabilities)
    assert a.tail_fraction == b.tail_fraction


def test_different_seeds_differ():
    assert not np.array_equal(sample_stable(0.5, 1.0, 1000, seed=1), sample_stable(0.5, 1.0, 1000, seed=2))


def test_sampler_rejects_small_counts():
    with pytest.raises(ValidationError):
        sample_mixed_process(0.5, 1.0, MIN_SAMPLES - 1, seed=0)


def test_sampler_config_collects_problems():
    with pytest.raises(ValidationError) as info:
        SamplerConfig(order=1.5, t=1.0, count=5, seed=0, bin_width=0.1)
    assert len(info.value.errors) == 2


def test_histogram_and_tail_sum_to_one(grid):
    e = sample_mixed_process(0.3, 5.0, MIN_SAMPLES, seed=2, grid=grid)
    assert e.probabilities.sum() + e.tail_fraction == pytest.approx(1.0, abs=1e-12)
    # s = 0.3 has heavy tails, some samples leave the box
    assert e.tail_fraction > 0
    assert e.left_tail_fraction <= e.tail_fraction
    assert e.metadata()["wrapped"] is False


def test_wrapped_samples_stay_in_the_box(grid):
    e = sample_mixed_process(0.3, 5.0, MIN_SAMPLES, seed=2, grid=grid, wrap=True)
    assert e.tail_fraction < 1e-3
    assert e.metadata()["wrapped"] is True


def test_kernel_self_sampling_passes_ks(grid, half):
    k = mixed_kernel(half, grid, 1.0)
    passes = [compare_density(sample_from_kernel(k, 100_000, seed), k).passes_ks for seed in (1, 2, 3)]
    assert sum(passes) >= 2


def test_wrapped_mixed_process_matches_kernel(grid, half):
    e = sample_mixed_process(0.5, 1.0, 200_000, seed=7, grid=grid, wrap=True)
    comparison = compare_density(e, mixed_kernel(half, grid, 1.0))
    assert comparison.ks_distance <= 0.01
    assert comparison.bin_count == grid.points
    assert comparison.sample_count == 200_000


def test_radial_comparison_in_two_dimensions():
    grid = GridSpec(2, 20.0, 128)
    k = mixed_kernel(ModelParams(2, 0.5), grid, 1.0)
    e = sample_mixed_process(0.5, 1.0, 100_000, seed=9, grid=grid, wrap=True)
    assert e.radial
    assert e.edges[0] == 0.0 and e.edges[-1] == pytest.approx(20.0)
    assert compare_density(e, k).ks_distance <= 0.01


def test_radial_cdf_of_gaussian():
    grid = GridSpec(2, 20.0, 128)
    g = gauss_kernel(grid, 1.0)
    radii = np.array([0.5, 1.0, 2.0, 4.0])
    # mass of g_t in the disc of radius r is 1 - exp(-r^2/(4t))
    assert np.allclose(radial_cdf(g, radii), 1.0 - np.exp(-(radii**2) / 4.0), atol=1e-10)


def test_radial_cdf_needs_two_dimensions(grid):
    with pytest.raises(ValidationError):
        radial_cdf(gauss_kernel(grid, 1.0), np.array([1.0]))


def test_compare_density_requires_grid_bins(grid, half):
    e = sample_mixed_process(0.5, 1.0, MIN_SAMPLES, seed=0, grid=grid, bin_width=2 * grid.spacing)
    with pytest.raises(ValidationError, match="grid cells"):
        compare_density(e, mixed_kernel(half, grid, 1.0))


def test_ks_critical_value():
    assert ks_critical_value(10**6) == pytest.approx(1.358e-3, rel=1e-2)


@pytest.mark.slow
@pytest.mark.parametrize("s, t", [(0.5, 1.0), (0.75, 0.5)])
def test_million_sample_agreement(grid, s, t):
    k = mixed_kernel(ModelParams(1, s), grid, t)
    e = sample_mixed_process(s, t, 10**6, seed=2024, grid=grid, wrap=True)
    assert compare_density(e, k).ks_distance <= 0.01


def test_half_order_stable_is_standard_cauchy():
    x = sample_stable(0.5, 1.0, 200_000, seed=21)
    # median stderr of a standard Cauchy is pi / (2 sqrt(n)) ~ 3.5e-3
    assert abs(np.median(x)) < 0.015
    # F(1) = 1/2 + arctan(1)/pi, stderr sqrt(3/16 / n) ~ 1e-3
    assert np.mean(x <= 1.0) == pytest.approx(0.75, abs=5e-3)


@pytest.mark.parametrize("dimension", [1, 2])
def test_stable_samples_are_symmetric(dimension):
    x = sample_stable(0.95, 1.0, 200_000, seed=8, dimension=dimension).reshape(200_000, -1)
    assert np.all(np.abs(x.mean(axis=0)) <= 3.0 * x.std(axis=0) / np.sqrt(x.shape[0]))


def test_wrong_time_is_detected(grid, half):
    e = sample_mixed_process(0.5, 2.0, 200_000, seed=13, grid=grid, wrap=True)
    comparison = compare_density(e, mixed_kernel(half, grid, 1.0))
    assert comparison.ks_distance > 10 * comparison.ks_critical_95
    assert not comparison.passes_ks


def test_empty_density_is_rejected(grid, half):
    edges = np.concatenate([grid.axis - 0.5 * grid.spacing, [grid.axis[-1] + 0.5 * grid.spacing]])
    empty = EmpiricalDensity(edges, np.zeros(grid.points), count=0, tail_fraction=0.0)
    with pytest.raises(ValidationError, match="zero samples"):
        compare_density(empty, mixed_kernel(half, grid, 1.0))


@pytest.mark.slow
def test_near_one_order_looks_gaussian_at_the_mode(grid):
    # W_t + J_t with s = 0.95 is close to N(0, 4t); its peak is (8 pi t)^{-1/2}
    e = sample_mixed_process(0.95, 1.0, 10**6, seed=5, grid=grid, wrap=True)
    centre = grid.points // 2
    mode = e.probabilities[centre - 2 : centre + 3].mean() / grid.spacing
    assert mode == pytest.approx((8.0 * np.pi) ** -0.5, rel=0.02)
