import numpy as np
import pytest

from components.errors import ValidationError
from components.fujita_lab import (
    DEFAULT_RADII,
    DichotomyRecord,
    SweepCell,
    TestFunctionFamily,
    bisect_threshold,
    blowup_monotonicity,
    build_test_function,
    certificate_exponent,
    convexity_check,
    critical_case_exponents,
    critical_exponent,
    cutoff,
    cutoff_derivative,
    delta_schedule,
    delta_threshold,
    dichotomy_sweep,
    duhamel_bound_check,
    envelope_check,
    nonexistence_certificate,
    small_initial_datum,
    smallest_fixed_point,
    tau0_lower_bound,
    tau_integral,
    weak_identity_defect,
)
from components.heat_kernels import ModelParams, mixed_kernel
from components.mild_solver import BLOW_UP, GLOBAL, SolverConfig, ode_blowup_time, picard_iterate, run
from components.spectral_core import Field, GridSpec, mixed_exponent

# ----------------------------------------------------------------------------
# Exponents
# ----------------------------------------------------------------------------


@pytest.mark.parametrize("N, s, expected", [(1, 0.5, 2.0), (2, 0.5, 1.5), (3, 0.75, 1.5)])
def test_critical_exponent(N, s, expected):
    assert critical_exponent(N, s) == pytest.approx(expected)


def test_critical_exponent_rejects_bad_dimension():
    with pytest.raises(ValidationError):
        critical_exponent(0, 0.5)


@pytest.mark.parametrize("p, expected", [(1.5, -1.0), (2.0, 0.0), (2.5, 1.0 / 3.0)])
def test_certificate_exponent(p, expected):
    assert certificate_exponent(1, 0.5, p) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("N, s", [(1, 0.5), (2, 0.75), (3, 0.25)])
def test_critical_case_exponents(N, s):
    exps = critical_case_exponents(N, s)
    assert exps.p == pytest.approx(critical_exponent(N, s))
    assert exps.delta == pytest.approx(0.0, abs=1e-14)
    assert exps.limit_exponent < 0


# ----------------------------------------------------------------------------
# delta schedule
# ----------------------------------------------------------------------------


def test_delta_threshold():
    assert delta_threshold(2.0) == pytest.approx(0.25)
    assert delta_threshold(3.0) == pytest.approx((2.0 / 3.0) / np.sqrt(3.0))
    with pytest.raises(ValidationError):
        delta_threshold(1.0)


def test_smallest_fixed_point():
    assert smallest_fixed_point(0.0, 2.0) == 0.0
    assert smallest_fixed_point(0.25, 2.0) == pytest.approx(0.5)
    assert smallest_fixed_point(0.1, 2.0) == pytest.approx((1.0 - np.sqrt(0.6)) / 2.0, rel=1e-12)
    assert smallest_fixed_point(0.26, 2.0) is None


def test_schedule_converges_below_threshold():
    schedule = delta_schedule(0.1, 2.0)
    assert schedule.converged
    assert len(schedule.deltas) == 101
    assert np.all(np.diff(schedule.deltas) >= 0)
    assert schedule.deltas[-1] == pytest.approx(schedule.limit, rel=1e-12)
    assert schedule.bound(0) == 0.1
    with pytest.raises(ValidationError):
        schedule.bound(101)


def test_schedule_diverges_above_threshold():
    schedule = delta_schedule(0.3, 2.0)
    assert not schedule.converged
    assert schedule.limit is None
    assert schedule.deltas[-1] > 1e6
    assert len(schedule.deltas) < 101
    assert schedule.threshold == pytest.approx(0.25)


def test_schedule_rejects_bad_input():
    with pytest.raises(ValidationError) as info:
        delta_schedule(-0.1, 1.0, n_max=0)
    assert len(info.value.errors) == 3


def test_bisected_threshold_matches_closed_form():
    assert bisect_threshold(2.0) == pytest.approx(0.25, abs=1e-6)


def test_tau0_lower_bound():
    assert tau0_lower_bound(1, 0.5, 3.0, 2.0) == pytest.approx(4.0)
    assert tau0_lower_bound(1, 0.5, 2.5, 2.0) == pytest.approx(4.0 * 2.0**3)
    with pytest.raises(ValidationError, match="p_bar"):
        tau0_lower_bound(1, 0.5, 2.0, 2.0)


# ----------------------------------------------------------------------------
# Duhamel inequality and envelope
# ----------------------------------------------------------------------------


def test_tau_integral_matches_closed_form():
    assert tau_integral(4.0, 2.0, 10.0) == pytest.approx(0.25, rel=1e-8)
    assert tau_integral(0.5, 1.5, 3.0) == pytest.approx(0.5**-0.5 / 0.5, rel=1e-8)


def test_duhamel_inequality_holds_above_the_threshold(coarse_grid, half, bound_constant):
    C = bound_constant.constant
    tau0 = 2.0 * tau0_lower_bound(1, 0.5, 3.0, C)
    report = duhamel_bound_check(half, 3.0, tau0, coarse_grid, [0.5, 1.0, 2.0], constant=bound_constant)
    assert report.holds
    assert report.margin > 0
    assert report.tau_integral_quadrature == pytest.approx(report.tau_integral_closed_form, rel=1e-8)
    # C^{p-1} tau0^{1-a}/(a-1) is 1/2 when tau0 = 2 C^2 and a = 2
    assert report.bound_factor == pytest.approx(0.5)
    assert report.middle_margin == pytest.approx(report.margin - 0.5, abs=1e-12)


def test_duhamel_check_rejects_critical_exponent(coarse_grid, half):
    with pytest.raises(ValidationError):
        duhamel_bound_check(half, 2.0, 1.0, coarse_grid, [1.0])
    with pytest.raises(ValidationError):
        duhamel_bound_check(half, 3.0, 0.0, coarse_grid, [1.0])


def test_small_datum_sits_below_the_kernel(coarse_grid, half):
    k = mixed_kernel(half, coarse_grid, 10.0, route="symbol")
    u0 = small_initial_datum(coarse_grid, half, 0.2, 10.0)
    assert np.all(u0.values < 0.2 * k.values)
    assert u0.values == pytest.approx(0.999 * 0.2 * k.values, rel=1e-14)


def test_envelope_holds_along_the_ladder(coarse_grid, half, bound_constant):
    p = 3.0
    delta0 = 0.5 * delta_threshold(p)
    tau0 = 2.0 * tau0_lower_bound(1, 0.5, p, bound_constant.constant)
    u0 = small_initial_datum(coarse_grid, half, delta0, tau0)
    ladder = picard_iterate(u0, None, 10, SolverConfig(exponent=p, horizon=1.0), half)
    report = envelope_check(ladder, delta_schedule(delta0, p), tau0, half)
    assert report.ok
    assert len(report.ratios) == 11
    assert report.ratios[0] == pytest.approx((1 - 1e-3) * delta0, rel=1e-10)


def test_small_datum_stays_global(coarse_grid, half, bound_constant):
    p = 3.0
    delta0 = 0.5 * delta_threshold(p)
    tau0 = 2.0 * tau0_lower_bound(1, 0.5, p, bound_constant.constant)
    u0 = small_initial_datum(coarse_grid, half, delta0, tau0)
    traj = run(u0, SolverConfig(exponent=p, dt=0.01, horizon=100.0), half)
    assert traj.outcome == GLOBAL
    # sup_x p_{t+tau0} sits at the origin: (1/|box|) sum_k exp(-(t+tau0)|xi_k|^2 - (t+tau0)|xi_k|)
    sigma = mixed_exponent(coarse_grid, 0.5).ravel()
    peaks = np.exp(-np.outer(traj.times + tau0, sigma)).sum(axis=1) / coarse_grid.box_volume
    limit = delta_schedule(delta0, p).limit
    assert np.all(traj.sup_norms <= limit * peaks + 1e-3)


def test_envelope_needs_enough_schedule_terms(coarse_grid, half):
    u0 = small_initial_datum(coarse_grid, half, 0.1, 4.0)
    ladder = picard_iterate(u0, None, 3, SolverConfig(exponent=3.0), half)
    with pytest.raises(ValidationError):
        envelope_check(ladder, delta_schedule(0.1, 3.0, n_max=1), 4.0, half)


# ----------------------------------------------------------------------------
# Test functions
# ----------------------------------------------------------------------------


def test_cutoff_profile():
    assert cutoff(np.array([0.0, 0.25, 0.5, 0.75, 1.0, 2.0])) == pytest.approx([1, 1, 1, 0.5, 0, 0])
    rho = np.linspace(0.55, 0.95, 9)
    h = 1e-6
    numeric = (cutoff(rho + h) - cutoff(rho - h)) / (2 * h)
    assert cutoff_derivative(rho) == pytest.approx(numeric, rel=1e-6, abs=1e-8)


def test_family_validation():
    assert TestFunctionFamily(2.0).m == pytest.approx(4.0)
    assert TestFunctionFamily(3.0, radius=4.0, beta=2.0).spatial_radius == 8.0
    with pytest.raises(ValidationError) as info:
        TestFunctionFamily(2.0, radius=0.5, beta=0.5)
    assert len(info.value.errors) == 2


def test_test_function_support_and_horizon(grid):
    with pytest.raises(ValidationError, match="support radius"):
        build_test_function(TestFunctionFamily(2.0, radius=8.0, beta=8.0), grid, np.linspace(0, 10, 11), 0.5)
    with pytest.raises(ValidationError, match="time support"):
        build_test_function(TestFunctionFamily(2.0, radius=4.0), grid, np.linspace(0, 1, 11), 0.5)
    tf = build_test_function(TestFunctionFamily(2.0, radius=4.0), grid, np.linspace(0, 4, 41), 0.5)
    assert tf.phi().shape == (41, grid.points)
    assert tf.eta[0] == 1.0 and tf.eta[-1] == 0.0
    assert tf.xi[grid.points // 2] == 1.0


@pytest.mark.parametrize("radius", [2.0, 4.0, 8.0])
def test_convexity_inequality(grid, radius):
    assert convexity_check(TestFunctionFamily(2.0, radius=radius), grid, 0.5).holds


# ----------------------------------------------------------------------------
# Non-existence certificate
# ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def subcritical_run():
    grid = GridSpec(1, 256.0, 1024)
    config = SolverConfig(exponent=1.5, dt=0.01, horizon=4.0, snapshot_stride=10)
    return run(Field.constant(grid, 0.05), config, ModelParams(1, 0.5))


def test_certificate_sign_in_the_subcritical_range(subcritical_run):
    report = nonexistence_certificate(
        subcritical_run, TestFunctionFamily(1.5, beta=16.0), ModelParams(1, 0.5), radii=DEFAULT_RADII
    )
    assert report.expected_exponent == pytest.approx(-1.0)
    assert report.fitted_exponent < 0
    assert report.sign_matches
    assert report.truncated_in_time
    assert [row["r"] for row in report.rows()] == list(DEFAULT_RADII)
    assert report.weak_identity_defect < 1e-2
    assert report.as_dict()["profile"] == "smoothstep-c3-v1"


def test_weak_identity_on_a_solution(subcritical_run):
    tf = build_test_function(TestFunctionFamily(1.5, radius=2.0, beta=16.0), subcritical_run.grid,
                             subcritical_run.snapshot_times, 0.5)
    assert weak_identity_defect(subcritical_run, tf, 1.5) < 1e-2


def test_certificate_needs_three_radii(subcritical_run):
    with pytest.raises(ValidationError):
        nonexistence_certificate(subcritical_run, TestFunctionFamily(1.5), ModelParams(1, 0.5), radii=(2.0, 4.0))


@pytest.mark.parametrize("p, expected", [(2.0, 0.0), (2.5, 1.0 / 3.0)])
def test_certificate_bound_slope_at_and_above_critical(p, expected):
    grid = GridSpec(1, 256.0, 1024)
    traj = run(Field.constant(grid, 0.05), SolverConfig(exponent=p, dt=0.01, horizon=4.0, snapshot_stride=10),
               ModelParams(1, 0.5))
    report = nonexistence_certificate(traj, TestFunctionFamily(p, beta=16.0), ModelParams(1, 0.5))
    assert report.expected_exponent == pytest.approx(expected, abs=1e-12)
    assert report.fitted_exponent == pytest.approx(expected, abs=0.05)
    assert report.sign_matches


def test_bound_exceeded_follows_the_trajectory():
    grid = GridSpec(1, 256.0, 1024)
    # linear flow keeps constants fixed, so iint u^p phi scales like amplitude^p
    config = SolverConfig(exponent=1.5, dt=0.5, horizon=4.0, snapshot_stride=1, source=False)
    family = TestFunctionFamily(1.5, beta=16.0)
    quiet = nonexistence_certificate(run(Field.constant(grid, 0.0), config, ModelParams(1, 0.5)), family,
                                     ModelParams(1, 0.5))
    loud = nonexistence_certificate(run(Field.constant(grid, 100.0), config, ModelParams(1, 0.5)), family,
                                    ModelParams(1, 0.5))
    assert not quiet.bound_exceeded
    assert loud.bound_exceeded
    assert loud.as_dict()["bound_exceeded"] is True
    # the bound side does not see the trajectory
    assert loud.bounds == quiet.bounds
    assert loud.fitted_exponent == quiet.fitted_exponent


# ----------------------------------------------------------------------------
# Dichotomy sweep
# ----------------------------------------------------------------------------


def test_uniform_sweep_blows_up_monotonically(coarse_grid):
    config = SolverConfig(dt=0.01, horizon=50.0)
    cells = [SweepCell(1, 0.5, p, "uniform", a) for p in (1.2, 1.5, 2.0) for a in (0.5, 1.0, 2.0)]
    records = dichotomy_sweep(cells, config, grid=coarse_grid)
    assert len(records) == 9
    assert [r.key for r in records] == sorted(c.key for c in cells)
    for rec in records:
        assert rec.outcome == BLOW_UP
        # t* is where sup|u| crosses U_max, which precedes the ODE time by U_max^{1-p}/(p-1)
        crossing = ode_blowup_time(rec.amplitude, rec.p) - ode_blowup_time(config.blowup_threshold, rec.p)
        assert rec.t_star == pytest.approx(crossing, rel=0.02)
        assert rec.envelope_ok is None
    assert blowup_monotonicity(records).ok


def test_small_cells_stay_global_under_the_envelope(coarse_grid, bound_constant):
    cells = [SweepCell(1, 0.5, p, "small", 0.5) for p in (2.5, 3.0)]
    records = dichotomy_sweep(
        cells, SolverConfig(dt=0.05, horizon=50.0), grid=coarse_grid, constant=bound_constant, workers=2
    )
    for rec in records:
        assert rec.outcome == GLOBAL
        assert rec.envelope_ok
        assert rec.delta0 == pytest.approx(0.5 * delta_threshold(rec.p))
        assert rec.tau0 == pytest.approx(2.0 * tau0_lower_bound(1, 0.5, rec.p, bound_constant.constant))
        assert rec.row()["t_star"] is None


def test_sweep_workers_do_not_change_results(coarse_grid):
    cells = [SweepCell(1, 0.5, 2.0, "uniform", a) for a in (1.0, 2.0)]
    config = SolverConfig(dt=0.01, horizon=5.0)
    serial = dichotomy_sweep(cells, config, grid=coarse_grid)
    threaded = dichotomy_sweep(cells, config, grid=coarse_grid, workers=2)
    assert [r.row() for r in serial] == [r.row() for r in threaded]


def test_sweep_rejects_bad_cells(coarse_grid):
    with pytest.raises(ValidationError, match="constant C"):
        dichotomy_sweep([SweepCell(1, 0.5, 3.0, "small", 0.5)], SolverConfig(), grid=coarse_grid)
    cell = SweepCell(1, 0.5, 2.0, "uniform", 1.0)
    with pytest.raises(ValidationError, match="duplicate"):
        dichotomy_sweep([cell, cell], SolverConfig(), grid=coarse_grid)
    with pytest.raises(ValidationError):
        SweepCell(1, 0.5, 2.0, "gaussian", 1.0)


def _record(amplitude, outcome, t_star):
    return DichotomyRecord(1, 0.5, 2.0, "uniform", amplitude, None, None, outcome, t_star, 1e6, None)


def test_monotonicity_flags_later_blowup_for_larger_data():
    report = blowup_monotonicity([_record(1.0, BLOW_UP, 1.0), _record(2.0, BLOW_UP, 1.5)])
    assert not report.ok
    assert report.violations == [((1, 0.5, 2.0), 1.0, 2.0)]
    assert not blowup_monotonicity([_record(1.0, BLOW_UP, 1.0), _record(2.0, GLOBAL, None)]).ok
    assert blowup_monotonicity([_record(1.0, GLOBAL, None), _record(2.0, BLOW_UP, 0.5)]).ok


def test_record_requires_consistent_t_star():
    with pytest.raises(ValidationError):
        _record(1.0, GLOBAL, 1.0)
