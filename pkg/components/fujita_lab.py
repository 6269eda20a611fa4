"""Quantitative side of the Fujita dichotomy for u_t + L u = u^p.

Global existence (p > 1 + 2s/N): the scalar schedule
delta_{n+1} = delta_0 + delta_n^p, the threshold tau_0 on the kernel shift,
the Duhamel inequality that makes the induction work, the datum
(1 - eps) delta_0 p_{tau_0}, and the envelope u_n <= delta_n p_{t+tau_0}
checked on the Picard ladder.

Non-existence (p <= 1 + 2s/N): rescaled cutoffs
phi(x, t) = zeta^m(x/(beta r)) psi^m(t/r^{2s}) with m = 2p/(p-1), the
weak identity they satisfy against a numerical solution, and the bound
B_r = iint G^{p'} that any nonnegative global solution obeys,
iint u^p phi <= B_r.  B_r scales like r^{N + 2s - 2sp/(p-1)}.

Cutoff profiles are the C^3 polynomial smoothstep
S(y) = y^4 (35 - 84 y + 70 y^2 - 20 y^3) on [0, 1], with
zeta(rho) = psi(rho) = 1 - S(2 rho - 1): equal to 1 on [0, 1/2] and to 0 on
[1, inf).  PROFILE_VERSION names this choice in every report.

The sweep tests moderate amplitudes and the monotonicity of t*; blow-up
time exceeds any fixed horizon for small enough data, so no finite run can
show that every nontrivial datum blows up.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.fft
from scipy.integrate import simpson
from scipy.optimize import brentq

from components.errors import ValidationError, require
from components.heat_kernels import KernelBoundEstimate, ModelParams, mixed_kernel
from components.mild_solver import (
    BLOW_UP,
    GLOBAL,
    IterationLadder,
    SolverConfig,
    Trajectory,
    power,
    run,
)
from components.spectral_core import (
    FFT_WORKERS,
    Field,
    GridSpec,
    apply_fractional_laplacian,
    apply_laplacian,
    check_order,
    mixed_exponent,
)

logger = logging.getLogger(__name__)

PROFILE_VERSION = "smoothstep-c3-v1"
DATUM_MARGIN = 1e-3
ENVELOPE_TOLERANCE = 1e-3
CONVEXITY_TOLERANCE = 1e-8
DIVERGENCE_BOUND = 1e6
DEFAULT_RADII = (2.0, 4.0, 8.0, 16.0)
TIME_NODES = 257


# ============================================================================
# Exponents
# ============================================================================


def critical_exponent(N: int, s: float) -> float:
    """p_bar = 1 + 2s/N."""
    if int(N) != N or N < 1:
        raise ValidationError(f"critical_exponent: N must be a positive integer (got {N})")
    check_order(s)
    return 1.0 + 2.0 * s / N


def certificate_exponent(N: int, s: float, p: float) -> float:
    """N + 2s - 2sp/(p-1), the growth rate of B_r in r."""
    return N + 2.0 * s - 2.0 * s * p / (p - 1.0)


@dataclass(frozen=True)
class CriticalCaseExponents:
    p: float
    delta: float
    limit_exponent: float


def critical_case_exponents(N: int, s: float) -> CriticalCaseExponents:
    """At p = p_bar: delta = -2s + (2s+N)(p-1)/p vanishes and the exponent
    -2s + N(p-1)/p of the beta-limit is negative."""
    p = critical_exponent(N, s)
    ratio = (p - 1.0) / p
    return CriticalCaseExponents(
        p=p,
        delta=-2.0 * s + (2.0 * s + N) * ratio,
        limit_exponent=-2.0 * s + N * ratio,
    )


# ============================================================================
# delta schedule
# ============================================================================


@dataclass(frozen=True)
class FujitaSchedule:
    delta0: float
    p: float
    deltas: Tuple[float, ...]
    limit: Optional[float]
    converged: bool
    threshold: float

    def bound(self, n: int) -> float:
        if n >= len(self.deltas):
            raise ValidationError(f"schedule holds {len(self.deltas)} terms, term {n} requested")
        return self.deltas[n]


def delta_threshold(p: float) -> float:
    """delta_0* = (1 - 1/p) p^{-1/(p-1)}, the largest delta_0 with a fixed point of x = delta_0 + x^p."""
    if not p > 1:
        raise ValidationError(f"p must be > 1 (got {p})")
    return (1.0 - 1.0 / p) * p ** (-1.0 / (p - 1.0))


def smallest_fixed_point(delta0: float, p: float) -> Optional[float]:
    """Smallest root of x = delta0 + x^p, or None above the threshold."""
    if delta0 == 0.0:
        return 0.0
    if delta0 > delta_threshold(p):
        return None
    peak = p ** (-1.0 / (p - 1.0))
    f = lambda x: delta0 + x**p - x  # noqa: E731
    if f(peak) >= 0.0:
        return peak
    return brentq(f, delta0, peak, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def delta_schedule(delta0: float, p: float, n_max: int = 100) -> FujitaSchedule:
    """Iterate delta_{n+1} = delta_0 + delta_n^p from delta_0.

    Divergent sequences stop once they pass DIVERGENCE_BOUND.
    """
    require(
        [
            (delta0 >= 0, f"delta0 must be >= 0 (got {delta0})"),
            (p > 1, f"p must be > 1 (got {p})"),
            (n_max >= 1, f"n_max must be >= 1 (got {n_max})"),
        ],
        "delta_schedule",
    )
    limit = smallest_fixed_point(delta0, p)
    deltas = [float(delta0)]
    for _ in range(n_max):
        nxt = delta0 + deltas[-1] ** p
        deltas.append(nxt)
        if nxt > DIVERGENCE_BOUND:
            break
    converged = limit is not None
    if not converged:
        logger.info("delta schedule diverges: delta0=%.6g above threshold %.6g", delta0, delta_threshold(p))
    return FujitaSchedule(
        delta0=float(delta0),
        p=float(p),
        deltas=tuple(deltas),
        limit=limit,
        converged=converged,
        threshold=delta_threshold(p),
    )


def brute_force_converges(delta0: float, p: float, iterations: int = 100_000, bound: float = 10.0) -> bool:
    """True when the raw recursion stays below ``bound`` for ``iterations`` steps."""
    x = delta0
    for _ in range(iterations):
        nxt = delta0 + x**p
        if nxt > bound:
            return False
        if nxt == x:
            return True
        x = nxt
    return True


def bisect_threshold(p: float, oracle=brute_force_converges, tolerance: float = 1e-8) -> float:
    """delta_0 threshold located by bisection on a convergence oracle."""
    lo, hi = 0.0, 1.0
    if not oracle(lo, p) or oracle(hi, p):
        raise ValidationError("bisect_threshold: oracle must accept 0 and reject 1")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if oracle(mid, p):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tau0_lower_bound(N: int, s: float, p: float, C: float) -> float:
    """(C^{1-p} (a - 1))^{2s/(2s - N(p-1))} with a = N(p-1)/(2s); needs p > p_bar."""
    p_bar = critical_exponent(N, s)
    require(
        [
            (p > p_bar, f"p = {p} must exceed p_bar = {p_bar} (the shift integral diverges otherwise)"),
            (C > 0, f"C must be > 0 (got {C})"),
        ],
        "tau0_lower_bound",
    )
    a = N * (p - 1.0) / (2.0 * s)
    return float((C ** (1.0 - p) * (a - 1.0)) ** (2.0 * s / (2.0 * s - N * (p - 1.0))))


# ============================================================================
# Duhamel inequality
# ============================================================================


@dataclass(frozen=True)
class DuhamelReport:
    tau0: float
    exponent: float
    tau_integral_quadrature: float
    tau_integral_closed_form: float
    constant: Optional[float]
    bound_factor: Optional[float]
    margin: float
    worst_x: float
    worst_t: float
    middle_margin: Optional[float]

    @property
    def holds(self) -> bool:
        return self.margin > 0

    def as_dict(self) -> dict:
        return dict(self.__dict__, holds=self.holds)


def tau_integral(tau0: float, a: float, horizon: float, nodes: int = 4097) -> float:
    """int_0^inf (tau + tau0)^{-a} dtau: Simpson on [0, horizon] plus the exact tail.

    Nodes are geometric in tau + tau0 so the integrand is resolved uniformly.
    """
    grid = np.geomspace(tau0, tau0 + horizon, nodes) - tau0
    grid[0] = 0.0
    head = simpson((grid + tau0) ** (-a), x=grid)
    return float(head + (horizon + tau0) ** (1.0 - a) / (a - 1.0))


def _kernel_peaks(grid: GridSpec, s: float, times: np.ndarray) -> np.ndarray:
    """max_x p_t(x) = p_t(0) for each t, from the spectrum."""
    sigma = mixed_exponent(grid, s).ravel()
    return np.array([np.sum(np.exp(-t * sigma)) for t in times]) / grid.box_volume


def duhamel_bound_check(
    params: ModelParams,
    p: float,
    tau0: float,
    grid: GridSpec,
    t_grid: np.ndarray,
    constant: Optional[Union[float, KernelBoundEstimate]] = None,
    nodes: int = 65,
) -> DuhamelReport:
    """Left side int_0^t p_{t-tau} * p^p_{tau+tau0} dtau against p_{t+tau0}.

    The left side is Simpson quadrature in tau on [0, t] with the kernel on
    the box; ``margin`` is min over grid points and t of (right - left)/right.
    With a bound constant C the middle term C^{p-1} p_{t+tau0} I(tau0) is also
    formed, I being the tau-integral of (tau+tau0)^{-a}.
    """
    a = params.dimension * (p - 1.0) / (2.0 * params.order)
    if not a > 1:
        raise ValidationError(f"duhamel_bound_check: need p > p_bar = {params.critical_exponent}")
    if not tau0 > 0:
        raise ValidationError(f"duhamel_bound_check: tau0 must be > 0 (got {tau0})")
    if isinstance(constant, KernelBoundEstimate):
        constant = constant.constant
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any(t_grid <= 0):
        raise ValidationError("duhamel_bound_check: t_grid must hold positive times")

    horizon = float(t_grid.max())
    closed = tau0 ** (1.0 - a) / (a - 1.0)
    quadrature = tau_integral(tau0, a, horizon)
    factor = None if constant is None else constant ** (p - 1.0) * closed

    sigma = mixed_exponent(grid, params.order)
    margin, worst_x, worst_t = np.inf, 0.0, 0.0
    middle_margin = None if factor is None else np.inf
    for t in t_grid:
        taus = np.linspace(0.0, t, nodes)
        integrand = []
        for tau in taus:
            shifted = mixed_kernel(params, grid, tau + tau0, route="symbol").values
            source_hat = scipy.fft.fftn(scipy.fft.ifftshift(power(shifted, p)), workers=FFT_WORKERS)
            integrand.append(np.exp(-(t - tau) * sigma) * source_hat)
        integrand = np.stack(integrand)
        left_hat = simpson(integrand.real, x=taus, axis=0) + 1j * simpson(integrand.imag, x=taus, axis=0)
        left = scipy.fft.fftshift(scipy.fft.ifftn(left_hat, workers=FFT_WORKERS).real)
        right = mixed_kernel(params, grid, t + tau0, route="symbol").values
        relative = (right - left) / right
        idx = np.unravel_index(int(np.argmin(relative)), relative.shape)
        if relative[idx] < margin:
            margin = float(relative[idx])
            worst_x = float(grid.radius[idx])
            worst_t = float(t)
        if factor is not None:
            middle_margin = min(middle_margin, float(np.min((factor * right - left) / right)))

    if margin <= 0:
        logger.warning("Duhamel inequality fails at |x|=%.4g, t=%.4g (margin %.3e)", worst_x, worst_t, margin)
    return DuhamelReport(
        tau0=tau0,
        exponent=a,
        tau_integral_quadrature=quadrature,
        tau_integral_closed_form=closed,
        constant=constant,
        bound_factor=factor,
        margin=margin,
        worst_x=worst_x,
        worst_t=worst_t,
        middle_margin=middle_margin,
    )


# ============================================================================
# Small datum and envelope
# ============================================================================


def small_initial_datum(
    grid: GridSpec, params: ModelParams, delta0: float, tau0: float, epsilon: float = DATUM_MARGIN
) -> Field:
    """(1 - epsilon) delta0 p_{tau0}, strictly below delta0 p_{tau0}."""
    require(
        [
            (delta0 > 0, f"delta0 must be > 0 (got {delta0})"),
            (tau0 > 0, f"tau0 must be > 0 (got {tau0})"),
            (0 < epsilon < 1, f"epsilon must lie in (0, 1) (got {epsilon})"),
        ],
        "small_initial_datum",
    )
    k = mixed_kernel(params, grid, tau0, route="symbol")
    return Field(grid, (1.0 - epsilon) * delta0 * k.values)


@dataclass(frozen=True)
class EnvelopeReport:
    ratios: List[float]
    deltas: List[float]
    limit: Optional[float]
    violations: List[int]
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return dict(self.__dict__, ok=self.ok)


def envelope_check(
    ladder: IterationLadder,
    schedule: FujitaSchedule,
    tau0: float,
    params: ModelParams,
    tolerance: float = ENVELOPE_TOLERANCE,
) -> EnvelopeReport:
    """max over (x, t) of u_n / p_{t+tau0} per iterate, against delta_n and M."""
    if not tau0 > 0:
        raise ValidationError(f"envelope_check: tau0 must be > 0 (got {tau0})")
    if len(schedule.deltas) <= ladder.depth:
        raise ValidationError(
            f"envelope_check: schedule holds {len(schedule.deltas)} terms, ladder depth is {ladder.depth}"
        )
    grid = ladder.grid
    envelopes = np.stack([mixed_kernel(params, grid, t + tau0, route="symbol").values for t in ladder.times])
    ratios, violations = [], []
    for n in range(ladder.depth + 1):
        ratio = float(np.max(ladder.iterates[n] / envelopes))
        ratios.append(ratio)
        bound = schedule.deltas[n]
        if ratio > bound + tolerance or (schedule.limit is not None and ratio > schedule.limit + tolerance):
            violations.append(n)
    if violations:
        logger.warning("envelope violated for iterates %s", violations)
    return EnvelopeReport(
        ratios=ratios,
        deltas=list(schedule.deltas[: ladder.depth + 1]),
        limit=schedule.limit,
        violations=violations,
        tolerance=tolerance,
    )


# ============================================================================
# Test functions
# ============================================================================


def smoothstep(y: np.ndarray) -> np.ndarray:
    y = np.clip(y, 0.0, 1.0)
    return y**4 * (35.0 - 84.0 * y + 70.0 * y**2 - 20.0 * y**3)


def cutoff(rho: np.ndarray) -> np.ndarray:
    """1 on [0, 1/2], 0 on [1, inf)."""
    return 1.0 - smoothstep(2.0 * np.asarray(rho) - 1.0)


def cutoff_derivative(rho: np.ndarray) -> np.ndarray:
    y = np.clip(2.0 * np.asarray(rho) - 1.0, 0.0, 1.0)
    return -2.0 * 140.0 * y**3 * (1.0 - y) ** 3


def cutoff_second_derivative(rho: np.ndarray) -> np.ndarray:
    y = np.clip(2.0 * np.asarray(rho) - 1.0, 0.0, 1.0)
    return -4.0 * 420.0 * y**2 * (1.0 - y) ** 2 * (1.0 - 2.0 * y)


@dataclass(frozen=True)
class TestFunctionFamily:
    """phi(x, t) = zeta^m(x/(beta r)) psi^m(t/r^{2s}); beta = 1 is the plain family."""

    exponent: float
    radius: float = 2.0
    beta: float = 1.0
    profile: str = PROFILE_VERSION

    __test__ = False

    def __post_init__(self):
        require(
            [
                (self.exponent > 1, f"p must be > 1 (got {self.exponent})"),
                (self.radius > 1, f"r must be > 1 (got {self.radius})"),
                (self.beta >= 1, f"beta must be >= 1 (got {self.beta})"),
                (self.profile == PROFILE_VERSION, f"unknown profile {self.profile!r}"),
            ],
            "TestFunctionFamily",
        )

    @property
    def m(self) -> float:
        return 2.0 * self.exponent / (self.exponent - 1.0)

    @property
    def spatial_radius(self) -> float:
        return self.beta * self.radius

    def time_support(self, s: float) -> float:
        return self.radius ** (2.0 * s)

    def with_radius(self, radius: float) -> "TestFunctionFamily":
        return replace(self, radius=radius)


@dataclass(frozen=True)
class TestFunction:
    """Separable weight xi(x) eta(t) and the pieces of -d/dt phi + L phi."""

    family: TestFunctionFamily
    grid: GridSpec
    times: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    eta_dot: np.ndarray = field(repr=False)
    laplacian_xi: np.ndarray = field(repr=False)
    fractional_xi: np.ndarray = field(repr=False)
    mixed_xi: np.ndarray = field(repr=False)

    __test__ = False

    def phi(self) -> np.ndarray:
        """phi on (times, *grid.shape)."""
        return np.multiply.outer(self.eta, self.xi)

    def time_derivative(self) -> np.ndarray:
        return np.multiply.outer(self.eta_dot, self.xi)


def _check_support(family: TestFunctionFamily, grid: GridSpec) -> None:
    if family.spatial_radius > grid.half_length:
        raise ValidationError(
            f"test function support radius {family.spatial_radius:g} exceeds the box half-length {grid.half_length:g}"
        )


def build_test_function(
    family: TestFunctionFamily, grid: GridSpec, t_grid: np.ndarray, s: float, check_horizon: bool = True
) -> TestFunction:
    """xi = zeta^m(x/(beta r)), eta = psi^m(t/r^{2s}), with d(eta)/dt, Laplacian xi,
    (-Laplacian)^s xi and L xi (the last three spectral)."""
    check_order(s)
    _check_support(family, grid)
    t_grid = np.asarray(t_grid, dtype=float)
    scale_t = family.time_support(s)
    if check_horizon and t_grid[-1] < scale_t:
        raise ValidationError(
            f"test function time support {scale_t:g} exceeds the time grid end {t_grid[-1]:g}"
        )
    m = family.m
    rho = grid.radius / family.spatial_radius
    xi = cutoff(rho) ** m
    tau = t_grid / scale_t
    psi = cutoff(tau)
    eta = psi**m
    eta_dot = m * psi ** (m - 1.0) * cutoff_derivative(tau) / scale_t

    xi_field = Field(grid, xi)
    fractional = apply_fractional_laplacian(xi_field, s).values
    neg_laplacian = apply_laplacian(xi_field).values
    return TestFunction(
        family=family,
        grid=grid,
        times=t_grid,
        xi=xi,
        eta=eta,
        eta_dot=eta_dot,
        laplacian_xi=-neg_laplacian,
        fractional_xi=fractional,
        mixed_xi=neg_laplacian + fractional,
    )


@dataclass(frozen=True)
class ConvexityReport:
    radius: float
    max_violation: float
    scale: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.max_violation <= self.tolerance * self.scale


def convexity_check(
    family: TestFunctionFamily, grid: GridSpec, s: float, tolerance: float = CONVEXITY_TOLERANCE
) -> ConvexityReport:
    """(-Laplacian)^s zeta^m(x/r) <= m zeta^{m-1}(x/r) r^{-2s} [(-Laplacian)^s zeta](x/r) pointwise.

    The right side uses (-Laplacian)^s[zeta(./r)] = r^{-2s}[(-Laplacian)^s zeta](./r),
    which holds exactly for the periodic operator on the same grid.
    """
    _check_support(family, grid)
    check_order(s)
    m = family.m
    zeta = cutoff(grid.radius / family.spatial_radius)
    lhs = apply_fractional_laplacian(Field(grid, zeta**m), s).values
    rhs = m * zeta ** (m - 1.0) * apply_fractional_laplacian(Field(grid, zeta), s).values
    return ConvexityReport(
        radius=family.radius,
        max_violation=float(max(0.0, np.max(lhs - rhs))),
        scale=family.spatial_radius ** (-2.0 * s),
        tolerance=tolerance,
    )


# ============================================================================
# Non-existence certificate
# ============================================================================


def _majorant_integral(family: TestFunctionFamily, s: float, points: int, dimension: int) -> float:
    """B_r = iint G^{p'} dx dt for the family at its radius.

    G = m psi ( | r^{-2s} zeta^2 |psi'| - (beta r)^{-2} psi (zeta Lap zeta + (m-1)|grad zeta|^2) |
                + psi zeta [(-Laplacian)^s zeta(./(beta r))]_+ ),
    the pointwise bound of (-d/dt phi + L phi) / phi^{1/p}.  It is evaluated on
    a box of half-length 8 beta r so every radius sees the same profile grid.
    """
    p = family.exponent
    m = family.m
    q = p / (p - 1.0)
    radius, rb = family.radius, family.spatial_radius
    grid = GridSpec(dimension, 8.0 * rb, points)
    rho = grid.radius / rb
    zeta = cutoff(rho)
    d1 = cutoff_derivative(rho)
    d2 = cutoff_second_derivative(rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(rho > 0, (dimension - 1) * d1 / np.where(rho > 0, rho, 1.0), 0.0)
    local = (zeta * (d2 + radial) + (m - 1.0) * d1**2) / rb**2
    fractional = zeta * np.maximum(apply_fractional_laplacian(Field(grid, zeta), s).values, 0.0)

    scale_t = radius ** (2.0 * s)
    tau = np.linspace(0.0, 1.0, TIME_NODES)
    psi = cutoff(tau)
    dpsi = np.abs(cutoff_derivative(tau))
    per_time = []
    for k in range(TIME_NODES):
        g = m * psi[k] * (
            np.abs(zeta**2 * dpsi[k] / scale_t - psi[k] * local) + psi[k] * fractional
        )
        per_time.append(np.sum(g**q) * grid.cell_volume)
    return float(simpson(np.asarray(per_time), x=tau * scale_t))


@dataclass(frozen=True)
class CertificateReport:
    """Measured integrals and bounds of the test-function argument.

    ``bounds`` and ``fitted_exponent`` depend only on the test functions, p
    and the time window, never on the trajectory: ``sign_matches`` checks the
    scaling of the bound.  ``bound_exceeded`` is the verdict on the solution.
    """

    p: float
    radii: List[float]
    integrals: List[float]
    bounds: List[float]
    fitted_exponent: float
    measured_exponent: Optional[float]
    expected_exponent: float
    weak_identity_defect: Optional[float]
    truncated_in_time: bool
    profile: str = PROFILE_VERSION

    @property
    def sign_matches(self) -> bool:
        if abs(self.expected_exponent) < 1e-12:
            return abs(self.fitted_exponent) <= 0.1
        return np.sign(self.fitted_exponent) == np.sign(self.expected_exponent)

    @property
    def bound_exceeded(self) -> bool:
        """Measured iint u^p phi above B_r: the trajectory cannot be a global solution."""
        return any(i > b for i, b in zip(self.integrals, self.bounds))

    def rows(self) -> List[dict]:
        return [
            {"r": r, "integral_up_phi": i, "bound_value": b}
            for r, i, b in zip(self.radii, self.integrals, self.bounds)
        ]

    def as_dict(self) -> dict:
        return dict(self.__dict__, sign_matches=self.sign_matches, bound_exceeded=self.bound_exceeded)


def _fit_slope(radii, values) -> Optional[float]:
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        return None
    slope, _ = np.polyfit(np.log(radii), np.log(values), 1)
    return float(slope)


def weak_identity_defect(traj: Trajectory, tf: TestFunction, p: float) -> float:
    """Relative gap in
    int u(T) phi(T) - int u0 phi(0) + iint u (-d/dt phi + L phi) = iint u^p phi,
    all integrals taken with Simpson in t over the snapshots."""
    times = traj.snapshot_times
    u = traj.snapshots
    dv = traj.grid.cell_volume
    axes = tuple(range(1, u.ndim))
    phi = tf.phi()
    generator = -tf.time_derivative() + np.multiply.outer(tf.eta, tf.mixed_xi)
    bulk = simpson(np.sum(u * generator, axis=axes) * dv, x=times)
    source = simpson(np.sum(power(u, p) * phi, axis=axes) * dv, x=times)
    final = float(np.sum(u[-1] * phi[-1]) * dv)
    initial = float(np.sum(u[0] * phi[0]) * dv)
    lhs = final - initial + bulk
    scale = max(abs(final), abs(initial), abs(bulk), abs(source))
    return float(abs(lhs - source) / scale) if scale > 0 else 0.0


def nonexistence_certificate(
    traj: Trajectory,
    family: TestFunctionFamily,
    params: ModelParams,
    p: Optional[float] = None,
    radii=DEFAULT_RADII,
    bound_points: Optional[int] = None,
) -> CertificateReport:
    """Measured iint u^p phi_r and the bound B_r over a ladder of radii.

    ``fitted_exponent`` is the least-squares slope of log B_r against log r
    and carries the sign test against N + 2s - 2sp/(p-1); it is the same
    for every trajectory on the same window.  Whether the trajectory
    contradicts global existence is ``bound_exceeded``.  The measured
    integral is nondecreasing in r, so its slope (``measured_exponent``) is
    reported but never negative.  The weak identity is checked at the
    smallest radius.
    """
    p = float(p if p is not None else traj.config.exponent)
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValidationError(f"nonexistence_certificate: need at least 3 radii for a fit (got {len(radii)})")
    if traj.snapshots is None or len(traj.snapshot_times) < 3:
        raise ValidationError("nonexistence_certificate: trajectory needs at least 3 snapshots")
    family = replace(family, exponent=p)
    grid = traj.grid
    s = params.order
    times = traj.snapshot_times
    axes = tuple(range(1, traj.snapshots.ndim))
    source = power(traj.snapshots, p)
    points = bound_points or max(grid.points, 256 if params.dimension == 1 else 64)

    integrals, bounds = [], []
    truncated = False
    identity = None
    for r in radii:
        fam = family.with_radius(r)
        tf = build_test_function(fam, grid, times, s, check_horizon=False)
        truncated = truncated or times[-1] < fam.time_support(s)
        spatial = np.sum(source * tf.xi, axis=axes) * grid.cell_volume
        integrals.append(float(simpson(spatial * tf.eta, x=times)))
        bounds.append(_majorant_integral(fam, s, points, params.dimension))
        if identity is None:
            identity = weak_identity_defect(traj, tf, p)
        logger.debug("certificate r=%g: integral %.6e, bound %.6e", r, integrals[-1], bounds[-1])

    if truncated:
        logger.info("certificate: trajectory ends before some test functions vanish in time")
    return CertificateReport(
        p=p,
        radii=radii,
        integrals=integrals,
        bounds=bounds,
        fitted_exponent=_fit_slope(radii, bounds),
        measured_exponent=_fit_slope(radii, integrals),
        expected_exponent=certificate_exponent(params.dimension, s, p),
        weak_identity_defect=identity,
        truncated_in_time=truncated,
    )


# ============================================================================
# Dichotomy sweep
# ============================================================================

DATUM_KINDS = ("uniform", "small")


@dataclass(frozen=True)
class SweepCell:
    """One parameter cell.  ``amplitude`` is the uniform level for
    ``uniform`` data and the multiple of delta_0* for ``small`` data."""

    N: int
    s: float
    p: float
    datum_kind: str
    amplitude: float

    def __post_init__(self):
        require(
            [
                (self.datum_kind in DATUM_KINDS, f"datum kind must be one of {DATUM_KINDS} (got {self.datum_kind!r})"),
                (self.amplitude >= 0, f"amplitude must be >= 0 (got {self.amplitude})"),
                (self.p > 1, f"p must be > 1 (got {self.p})"),
            ],
            "SweepCell",
        )

    @property
    def key(self) -> tuple:
        return (self.N, self.s, self.p, self.datum_kind, self.amplitude)


@dataclass(frozen=True)
class DichotomyRecord:
    N: int
    s: float
    p: float
    datum_kind: str
    amplitude: float
    delta0: Optional[float]
    tau0: Optional[float]
    outcome: str
    t_star: Optional[float]
    max_supnorm: float
    envelope_ok: Optional[bool]
    constant: Optional[float] = None

    def __post_init__(self):
        if (self.t_star is not None) != (self.outcome == BLOW_UP):
            raise ValidationError("DichotomyRecord: t_star must be present exactly when the outcome is blow-up")

    @property
    def key(self) -> tuple:
        return (self.N, self.s, self.p, self.datum_kind, self.amplitude)

    def row(self) -> dict:
        return {
            "N": self.N,
            "s": self.s,
            "p": self.p,
            "datum_kind": self.datum_kind,
            "amplitude": self.amplitude,
            "delta0": self.delta0,
            "tau0": self.tau0,
            "outcome": self.outcome,
            "t_star": self.t_star,
            "max_supnorm": self.max_supnorm,
            "envelope_ok": self.envelope_ok,
        }


def _envelope_along(traj: Trajectory, limit: float, tau0: float, s: float, samples: int = 256) -> bool:
    """sup|u(t)| <= M sup_x p_{t+tau0} + tolerance at sampled recorded times."""
    finite = np.isfinite(traj.sup_norms)
    idx = np.unique(np.linspace(0, int(np.count_nonzero(finite)) - 1, samples).round().astype(int))
    times = traj.times[finite][idx]
    sups = traj.sup_norms[finite][idx]
    envelope = limit * _kernel_peaks(traj.grid, s, times + tau0) + ENVELOPE_TOLERANCE
    return bool(np.all(sups <= envelope))


def _run_cell(
    cell: SweepCell, config: SolverConfig, grid: Optional[GridSpec], constant: Optional[float], tau0_factor: float
) -> DichotomyRecord:
    params = ModelParams(cell.N, cell.s)
    grid = grid if grid is not None and grid.dimension == cell.N else GridSpec(cell.N)
    cfg = replace(config, exponent=cell.p)
    delta0 = tau0 = None
    if cell.datum_kind == "uniform":
        u0 = Field.constant(grid, cell.amplitude)
    else:
        if constant is None:
            raise ValidationError("dichotomy_sweep: small data need the kernel bound constant C")
        delta0 = cell.amplitude * delta_threshold(cell.p)
        tau0 = tau0_factor * tau0_lower_bound(cell.N, cell.s, cell.p, constant)
        u0 = small_initial_datum(grid, params, delta0, tau0) if delta0 > 0 else Field.constant(grid, 0.0)

    traj = run(u0, cfg, params)
    envelope_ok = None
    if cell.datum_kind == "small":
        limit = smallest_fixed_point(delta0, cell.p)
        envelope_ok = limit is not None and traj.outcome == GLOBAL and _envelope_along(traj, limit, tau0, cell.s)
    logger.info("sweep cell %s -> %s", cell.key, traj.describe_outcome())
    return DichotomyRecord(
        N=cell.N,
        s=cell.s,
        p=cell.p,
        datum_kind=cell.datum_kind,
        amplitude=cell.amplitude,
        delta0=delta0,
        tau0=tau0,
        outcome=traj.outcome,
        t_star=traj.t_star,
        max_supnorm=traj.max_sup_norm,
        envelope_ok=envelope_ok,
        constant=constant if cell.datum_kind == "small" else None,
    )


def dichotomy_sweep(
    cells,
    config: SolverConfig,
    grid: Optional[GridSpec] = None,
    constant: Optional[Union[float, KernelBoundEstimate]] = None,
    tau0_factor: float = 2.0,
    workers: int = 1,
) -> List[DichotomyRecord]:
    """Run every cell and return the records sorted by parameter key."""
    cells = [c if isinstance(c, SweepCell) else SweepCell(*c) for c in cells]
    if isinstance(constant, KernelBoundEstimate):
        constant = constant.constant
    keys = [c.key for c in cells]
    if len(set(keys)) != len(keys):
        raise ValidationError("dichotomy_sweep: duplicate parameter cells")
    task = lambda cell: _run_cell(cell, config, grid, constant, tau0_factor)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, cells))
    else:
        records = [task(cell) for cell in cells]
    return sorted(records, key=lambda r: r.key)


@dataclass(frozen=True)
class MonotonicityReport:
    violations: List[tuple]

    @property
    def ok(self) -> bool:
        return not self.violations


def blowup_monotonicity(records) -> MonotonicityReport:
    """Within each (N, s, p), t* of uniform data must not increase with amplitude,
    and a larger amplitude cannot stay global where a smaller one blew up."""
    groups: Dict[tuple, List[DichotomyRecord]] = {}
    for rec in records:
        if rec.datum_kind == "uniform" and rec.amplitude > 0:
            groups.setdefault((rec.N, rec.s, rec.p), []).append(rec)
    violations = []
    for key, group in sorted(groups.items()):
        group.sort(key=lambda r: r.amplitude)
        for lower, higher in zip(group, group[1:]):
            if lower.outcome != BLOW_UP:
                continue
            if higher.outcome != BLOW_UP or higher.t_star > lower.t_star:
                violations.append((key, lower.amplitude, higher.amplitude))
    return MonotonicityReport(violations)
