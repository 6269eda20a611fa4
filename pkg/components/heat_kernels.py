"""Heat kernels of the Laplacian, of the fractional Laplacian and of the mixed
operator on the periodic box, with the checks that go with them.

* ``gauss_kernel``       g_t sampled in real space from its closed form.
* ``fractional_kernel``  h_t = inverse(exp(-t|xi|^{2s})).
* ``mixed_kernel``       p_t by the symbol route and, as a cross-check, by the
                         convolution route g_t * h_t.

Kernels on the box are periodizations of the kernels on R^N.  The fractional
tail decays like t/|x|^{N+2s}, so a finite box always loses some mass to its
images; ``aliasing_estimate`` quantifies that loss.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gamma, gammaincc, gammainccinv, gammaln

from components.errors import NumericalFailure, ValidationError
from components.spectral_core import (
    Field,
    GridSpec,
    check_order,
    convolve,
    forward_array,
    inverse_array,
    mixed_exponent,
    reflect,
)

logger = logging.getLogger(__name__)

# ============================================================================
# Tolerances
# ============================================================================

MASS_TOLERANCE = 1e-6
RINGING_TOLERANCE = 1e-10
ALIASING_BUDGET = 1e-8
ROUTE_TOLERANCE = 1e-8
SEMIGROUP_TOLERANCE = 1e-6
EVENNESS_TOLERANCE = 1e-12
STABILITY_TOLERANCE = 0.10

KERNEL_KINDS = ("gauss", "fractional", "mixed")
PROVENANCES = ("symbol", "convolution", "closed_form", "monte_carlo")


# ============================================================================
# Model parameters
# ============================================================================


def normalization_constant(N: int, s: float) -> float:
    """C_{N,s} = 2^{2s-1} 2s Gamma((N+2s)/2) / (pi^{N/2} Gamma(1-s)).

    Evaluated through log-gamma so that s close to 1 (where Gamma(1-s) blows
    up) stays accurate.
    """
    if int(N) != N or N < 1:
        raise ValidationError(f"normalization_constant: N must be a positive integer (got {N})")
    check_order(s)
    log_value = (
        (2.0 * s - 1.0) * np.log(2.0)
        + np.log(2.0 * s)
        + gammaln((N + 2.0 * s) / 2.0)
        - 0.5 * N * np.log(np.pi)
        - gammaln(1.0 - s)
    )
    return float(np.exp(log_value))


@dataclass(frozen=True)
class ModelParams:
    """Dimension N and order s of L = -Laplacian + (-Laplacian)^s."""

    dimension: int = 1
    order: float = 0.5
    normalization: float = field(init=False)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValidationError(f"ModelParams: dimension must be 1, 2 or 3 (got {self.dimension})")
        object.__setattr__(self, "order", float(self.order))
        object.__setattr__(self, "normalization", normalization_constant(self.dimension, self.order))

    @property
    def critical_exponent(self) -> float:
        """Fujita exponent 1 + 2s/N."""
        return 1.0 + 2.0 * self.order / self.dimension

    @property
    def scaling_exponent(self) -> float:
        """N/(2s): h_t(0) ~ t^{-N/(2s)}."""
        return self.dimension / (2.0 * self.order)

    def describe(self) -> dict:
        return {"N": self.dimension, "s": self.order, "C_Ns": self.normalization, "p_bar": self.critical_exponent}


# ============================================================================
# Kernel container
# ============================================================================


@dataclass(frozen=True)
class KernelField:
    """Sampled heat kernel with its time label and how it was obtained."""

    field: Field
    t: float
    kind: str
    provenance: str
    order: Optional[float] = None
    # asymmetry of the inverse transform before it was folded onto its even part
    raw_evenness_defect: float = 0.0

    def __post_init__(self):
        problems = []
        if not self.t > 0:
            problems.append(f"t must be > 0 (got {self.t})")
        if self.kind not in KERNEL_KINDS:
            problems.append(f"kind must be one of {KERNEL_KINDS} (got {self.kind!r})")
        if self.provenance not in PROVENANCES:
            problems.append(f"provenance must be one of {PROVENANCES} (got {self.provenance!r})")
        if self.kind != "gauss" and self.order is None:
            problems.append(f"a {self.kind} kernel needs its order s")
        if problems:
            raise ValidationError("KernelField: " + "; ".join(problems), problems)

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def peak(self) -> float:
        return float(np.max(self.values))

    @property
    def mass_defect(self) -> float:
        return abs(self.field.mass() - 1.0)

    def params(self) -> Optional[ModelParams]:
        if self.order is None:
            return None
        return ModelParams(self.grid.dimension, self.order)

    def metadata(self) -> dict:
        meta = {
            "kind": self.kind,
            "provenance": self.provenance,
            "t": self.t,
            "s": self.order,
            "mass_defect": self.mass_defect,
        }
        meta.update(self.grid.describe())
        return meta


def _evenness(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - reflect(values)))) / float(np.max(np.abs(values)))


def _even_part(values: np.ndarray) -> Tuple[np.ndarray, float]:
    """Fold ``values`` onto its even part; also return the asymmetry it had."""
    # (a + b) / 2 is symmetric in a, b, so the result is exactly even
    return 0.5 * (values + reflect(values)), _evenness(values)


def _check_time(t: float) -> None:
    if not (np.isfinite(t) and t > 0):
        raise ValidationError(f"kernel time must be finite and > 0 (got {t})")


def _check_mass(values: np.ndarray, grid: GridSpec, kind: str, t: float, tolerance: float) -> None:
    defect = abs(float(np.sum(values)) * grid.cell_volume - 1.0)
    if defect > tolerance:
        unresolved = kind == "gauss" and np.sqrt(2.0 * t) < grid.spacing
        hint = "increase n (kernel unresolved)" if unresolved else "increase R"
        raise NumericalFailure(
            f"{kind} kernel at t={t:g}: mass defect {defect:.3e} > {tolerance:.1e} on R={grid.half_length:g}, "
            f"n={grid.points}; {hint} (try R={2 * grid.half_length:g})"
        )


def _check_ringing(values: np.ndarray, kind: str, t: float, strict: bool) -> float:
    peak = float(np.max(values))
    floor = float(np.min(values))
    ringing = max(0.0, -floor) / peak if peak > 0 else 0.0
    if ringing > RINGING_TOLERANCE:
        message = (
            f"{kind} kernel at t={t:g}: negative lobe {floor:.3e} below -{RINGING_TOLERANCE:.0e}*peak "
            "(spectral truncation ringing; refine n)"
        )
        if strict:
            raise NumericalFailure(message)
        logger.warning(message)
    return ringing


# ============================================================================
# Kernels
# ============================================================================


def gauss_kernel(grid: GridSpec, t: float, mass_tolerance: float = MASS_TOLERANCE) -> KernelField:
    """g_t(z) = (4 pi t)^{-N/2} exp(-|z|^2/(4t)) sampled on the grid (no periodization)."""
    _check_time(t)
    N = grid.dimension
    values = (4.0 * np.pi * t) ** (-N / 2.0) * np.exp(-(grid.radius**2) / (4.0 * t))
    aliasing_estimate(None, grid, t, kind="gauss", level=logging.DEBUG)
    _check_mass(values, grid, "gauss", t, mass_tolerance)
    return KernelField(Field(grid, values), t, "gauss", "closed_form")


def fractional_kernel(
    params: ModelParams,
    grid: GridSpec,
    t: float,
    mass_tolerance: float = MASS_TOLERANCE,
    strict: bool = False,
) -> KernelField:
    """h_t = inverse transform of exp(-t|xi|^{2s})."""
    _check_time(t)
    _check_grid(params, grid)
    multiplier = np.exp(-t * grid.wavenumber_magnitude ** (2.0 * params.order))
    values, asymmetry = _even_part(inverse_array(multiplier, grid))
    _check_ringing(values, "fractional", t, strict)
    _check_mass(values, grid, "fractional", t, mass_tolerance)
    aliasing_estimate(params, grid, t, kind="fractional", level=logging.DEBUG)
    return KernelField(Field(grid, values), t, "fractional", "symbol", params.order, asymmetry)


def mixed_kernel(
    params: ModelParams,
    grid: GridSpec,
    t: float,
    route: str = "both",
    mass_tolerance: float = MASS_TOLERANCE,
    route_tolerance: float = ROUTE_TOLERANCE,
    strict: bool = False,
) -> KernelField:
    """p_t by the symbol route exp(-t(|xi|^2 + |xi|^{2s})) or by g_t * h_t.

    ``route="both"`` builds both and raises NumericalFailure when they differ
    by more than ``route_tolerance`` relative to the peak; the symbol route is
    returned.  ``route="symbol"`` skips the cross-check, which matters when
    t is so small that the sampled Gaussian is not resolved by the grid.
    """
    if route not in ("symbol", "convolution", "both"):
        raise ValidationError(f"mixed_kernel: unknown route {route!r}")
    _check_time(t)
    _check_grid(params, grid)

    symbol_values = None
    asymmetry = {}
    if route in ("symbol", "both"):
        symbol_values, asymmetry["symbol"] = _even_part(
            inverse_array(np.exp(-t * mixed_exponent(grid, params.order)), grid)
        )
    conv_values = None
    if route in ("convolution", "both"):
        g = gauss_kernel(grid, t, mass_tolerance)
        h = fractional_kernel(params, grid, t, mass_tolerance)
        conv_values, asymmetry["convolution"] = _even_part(convolve(g.field, h.field).values)

    if route == "both":
        peak = float(np.max(symbol_values))
        disagreement = float(np.max(np.abs(symbol_values - conv_values))) / peak
        logger.debug("mixed kernel t=%g: route disagreement %.3e", t, disagreement)
        if disagreement > route_tolerance:
            raise NumericalFailure(
                f"mixed kernel at t={t:g}: symbol and convolution routes differ by {disagreement:.3e} "
                f"(> {route_tolerance:.0e}); the grid aliases g_t, refine n or enlarge R"
            )

    values = conv_values if route == "convolution" else symbol_values
    provenance = "convolution" if route == "convolution" else "symbol"
    _check_ringing(values, "mixed", t, strict)
    _check_mass(values, grid, "mixed", t, mass_tolerance)
    aliasing_estimate(params, grid, t, kind="mixed", level=logging.DEBUG)
    return KernelField(Field(grid, values), t, "mixed", provenance, params.order, asymmetry[provenance])


def kernel(kind: str, params: Optional[ModelParams], grid: GridSpec, t: float, **kwargs) -> KernelField:
    """Dispatch on ``kind``."""
    if kind == "gauss":
        return gauss_kernel(grid, t, **kwargs)
    if params is None:
        raise ValidationError(f"a {kind} kernel needs ModelParams")
    if kind == "fractional":
        return fractional_kernel(params, grid, t, **kwargs)
    if kind == "mixed":
        return mixed_kernel(params, grid, t, **kwargs)
    raise ValidationError(f"unknown kernel kind {kind!r}")


def _check_grid(params: ModelParams, grid: GridSpec) -> None:
    if params.dimension != grid.dimension:
        raise ValidationError(f"ModelParams has N={params.dimension} but the grid has N={grid.dimension}")


# ============================================================================
# Closed forms for s = 1/2, N = 1
# ============================================================================


def poisson_kernel(x: np.ndarray, t: float) -> np.ndarray:
    """Free-space Poisson kernel (1/pi) t / (t^2 + x^2)."""
    return t / (np.pi * (t**2 + np.asarray(x) ** 2))


def periodic_poisson_kernel(grid: GridSpec, t: float) -> KernelField:
    """Poisson kernel summed over the images of the box [-R, R).

    (1/(2R)) sinh(pi t/R) / (cosh(pi t/R) - cos(pi x/R)), the exact inverse of
    exp(-t|xi|) on the wavenumbers pi k/R.
    """
    if grid.dimension != 1:
        raise ValidationError("periodic_poisson_kernel: only N = 1 has this closed form")
    _check_time(t)
    R = grid.half_length
    a = np.pi * t / R
    # cosh(a) - cos(b) written as 2 sinh^2(a/2) + 2 sin^2(b/2) to avoid cancellation
    denominator = 2.0 * np.sinh(a / 2.0) ** 2 + 2.0 * np.sin(np.pi * grid.axis / (2.0 * R)) ** 2
    values = np.sinh(a) / (2.0 * R * denominator)
    return KernelField(Field(grid, values), t, "fractional", "closed_form", 0.5)


@dataclass(frozen=True)
class PoissonComparison:
    t: float
    periodic_defect: float
    free_space_difference: float
    inner_radius: float


def compare_with_poisson(grid: GridSpec, t: float) -> PoissonComparison:
    """Max relative gap on |x| <= R/2 between h_t (s = 1/2) and the Poisson kernel.

    ``periodic_defect`` is measured against the periodized closed form and
    should stay below 1e-4; ``free_space_difference``
    is the size of the image sum, i.e. the gap to (1/pi) t/(t^2+x^2).
    """
    h = fractional_kernel(ModelParams(1, 0.5), grid, t)
    inner = grid.radius <= grid.half_length / 2.0
    periodic = periodic_poisson_kernel(grid, t).values
    free = poisson_kernel(grid.axis, t)
    return PoissonComparison(
        t=t,
        periodic_defect=float(np.max(np.abs(h.values - periodic)[inner] / periodic[inner])),
        free_space_difference=float(np.max(np.abs(h.values - free)[inner] / free[inner])),
        inner_radius=grid.half_length / 2.0,
    )


# ============================================================================
# Aliasing and self-similarity
# ============================================================================


@dataclass(frozen=True)
class AliasingReport:
    kind: str
    t: float
    tail_mass: float
    budget: float
    suggested_half_length: float

    @property
    def within_budget(self) -> bool:
        return self.tail_mass <= self.budget


def _sphere_area(N: int) -> float:
    return float(2.0 * np.pi ** (N / 2.0) / gamma(N / 2.0))


def _gauss_tail(N: int, t: float, radius: float) -> float:
    # mass of g_t outside the ball of given radius: upper incomplete gamma
    return float(gammaincc(N / 2.0, radius**2 / (4.0 * t)))


def aliasing_estimate(
    params: Optional[ModelParams],
    grid: GridSpec,
    t: float,
    kind: str = "mixed",
    budget: float = ALIASING_BUDGET,
    strict: bool = False,
    level: int = logging.WARNING,
) -> AliasingReport:
    """Kernel mass outside |x| <= R/2, from the tail bound C_{N,s} t/|x|^{N+2s}.

    For the Gaussian the exact tail is used.  A mixed kernel is bounded by
    the sum of both tails.  Exceeding ``budget`` is logged at ``level``, or
    raised as ValidationError when ``strict``.
    """
    N = grid.dimension
    rho = grid.half_length / 2.0
    tail = 0.0
    suggested = grid.half_length
    if kind in ("gauss", "mixed"):
        tail += _gauss_tail(N, t, rho)
    if kind in ("fractional", "mixed"):
        if params is None:
            raise ValidationError(f"aliasing_estimate: a {kind} kernel needs ModelParams")
        s = params.order
        weight = params.normalization * t * _sphere_area(N) / (2.0 * s)
        tail += weight * rho ** (-2.0 * s)
        # R such that weight * (R/2)^{-2s} meets the budget
        suggested = max(suggested, 2.0 * (weight / budget) ** (1.0 / (2.0 * s)))
    if kind in ("gauss", "mixed"):
        suggested = max(suggested, 2.0 * np.sqrt(4.0 * t * gammainccinv(N / 2.0, budget)))

    report = AliasingReport(kind, t, float(tail), budget, float(suggested))
    if not report.within_budget:
        message = (
            f"{kind} kernel at t={t:g}: estimated mass outside |x|<=R/2 is {tail:.3e} "
            f"(budget {budget:.0e}); R={grid.half_length:g}, suggested R >= {suggested:.3g}"
        )
        if strict:
            raise ValidationError(message)
        logger.log(level, message)
    return report


def self_similarity_defect(params: ModelParams, grid: GridSpec, t: float) -> float:
    """Max |h_t(x) - t^{-N/(2s)} h_1(t^{-1/(2s)} x)| relative to the peak.

    h_1 is evaluated on the box of half-length R t^{-1/(2s)} with the same
    point count, whose grid points are exactly t^{-1/(2s)} x_j and whose
    wavenumbers reproduce the symbol of h_t, so no interpolation enters.
    """
    _check_time(t)
    s = params.order
    h_t = fractional_kernel(params, grid, t)
    scaled_grid = grid.rescaled(t ** (-1.0 / (2.0 * s)))
    h_1 = fractional_kernel(params, scaled_grid, 1.0)
    rescaled = t ** (-params.scaling_exponent) * h_1.values
    return float(np.max(np.abs(h_t.values - rescaled)) / h_t.peak)


# ============================================================================
# Property checks
# ============================================================================


@dataclass(frozen=True)
class KernelPropertyReport:
    """Per-property maximum defects of a kernel (and a semigroup pair)."""

    kind: str
    t: float
    tau: Optional[float]
    positivity_defect: float
    evenness_defect: float
    mass_defect: float
    semigroup_defect: Optional[float] = None
    tolerances: dict = field(default_factory=dict)

    @property
    def within_tolerance(self) -> bool:
        return not self.failures()

    def failures(self) -> List[str]:
        checks = [
            ("positivity", self.positivity_defect, self.tolerances.get("positivity", RINGING_TOLERANCE)),
            ("evenness", self.evenness_defect, self.tolerances.get("evenness", EVENNESS_TOLERANCE)),
            ("mass", self.mass_defect, self.tolerances.get("mass", MASS_TOLERANCE)),
        ]
        if self.semigroup_defect is not None:
            checks.append(
                ("semigroup", self.semigroup_defect, self.tolerances.get("semigroup", SEMIGROUP_TOLERANCE))
            )
        return [f"{name}: {value:.3e} > {limit:.1e}" for name, value, limit in checks if value > limit]

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "t": self.t,
            "tau": self.tau,
            "positivity_defect": self.positivity_defect,
            "evenness_defect": self.evenness_defect,
            "mass_defect": self.mass_defect,
            "semigroup_defect": self.semigroup_defect,
            "within_tolerance": self.within_tolerance,
        }


def verify_kernel_properties(k: KernelField, k2: Optional[KernelField] = None, **tolerances) -> KernelPropertyReport:
    """Positivity, evenness, unit mass and, given ``k2`` at time tau, the
    semigroup identity k_t * k_tau = k_{t+tau}.  Report only, never raises
    on a failed property."""
    values = k.values
    peak = k.peak
    positivity = max(0.0, -float(np.min(values))) / peak
    # a folded kernel is even by construction; its pre-fold asymmetry is what is checked
    evenness = max(_evenness(values), k.raw_evenness_defect)

    semigroup = None
    tau = None
    if k2 is not None:
        if k2.grid != k.grid or k2.kind != k.kind or k2.order != k.order:
            raise ValidationError("verify_kernel_properties: kernels must share grid, kind and order")
        tau = k2.t
        options = {"route": "symbol"} if k.kind == "mixed" else {}
        reference = kernel(k.kind, k.params(), k.grid, k.t + tau, **options)
        product = inverse_array(forward_array(values, k.grid) * forward_array(k2.values, k.grid), k.grid)
        semigroup = float(np.max(np.abs(product - reference.values)) / reference.peak)

    return KernelPropertyReport(
        kind=k.kind,
        t=k.t,
        tau=tau,
        positivity_defect=positivity,
        evenness_defect=evenness,
        mass_defect=k.mass_defect,
        semigroup_defect=semigroup,
        tolerances=dict(tolerances),
    )


# ============================================================================
# Bound constant
# ============================================================================


@dataclass(frozen=True)
class KernelBoundEstimate:
    """Empirical constants of the two-sided fractional bound and the mixed upper bound.

    The fractional ratio is h_t(x) / min{t^{-N/(2s)}, t/|x|^{N+2s}} over the
    scanned t and |x| <= ``x_max``; the mixed ratio is max_x p_t(x) t^{N/(2s)}.
    """

    constant: float
    fractional_constant: float
    fractional_ratio_max: float
    fractional_ratio_min: float
    mixed_constant: float
    t_range: Tuple[float, float]
    mixed_t_range: Tuple[float, float]
    x_max: float
    refined_constant: Optional[float] = None
    relative_change: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "constant": self.constant,
            "fractional_constant": self.fractional_constant,
            "fractional_ratio_max": self.fractional_ratio_max,
            "fractional_ratio_min": self.fractional_ratio_min,
            "mixed_constant": self.mixed_constant,
            "t_range": list(self.t_range),
            "mixed_t_range": list(self.mixed_t_range),
            "x_max": self.x_max,
            "refined_constant": self.refined_constant,
            "relative_change": self.relative_change,
        }


def _scan_bound_ratios(params, grid, times, mixed_times):
    N, s = params.dimension, params.order
    a = params.scaling_exponent
    inner = grid.radius <= grid.half_length / 2.0
    r = grid.radius[inner]
    ratio_max, ratio_min = 0.0, np.inf
    for t in times:
        h = fractional_kernel(params, grid, t, mass_tolerance=np.inf).values[inner]
        with np.errstate(divide="ignore"):
            envelope = np.minimum(t ** (-a), t / r ** (N + 2.0 * s))
        ratio = h / envelope
        if not np.all(np.isfinite(ratio)) or np.min(ratio) <= 0:
            raise NumericalFailure(
                f"bound ratio at t={t:g} is not finite and positive; kernel unresolved or aliased"
            )
        ratio_max = max(ratio_max, float(np.max(ratio)))
        ratio_min = min(ratio_min, float(np.min(ratio)))
    mixed = 0.0
    for t in mixed_times:
        p = mixed_kernel(params, grid, t, route="symbol", mass_tolerance=np.inf)
        mixed = max(mixed, p.peak * t**a)
    return ratio_max, ratio_min, mixed


def estimate_bound_constant(
    params: ModelParams,
    t_range: Tuple[float, float] = (0.1, 10.0),
    grid: Optional[GridSpec] = None,
    mixed_t_range: Tuple[float, float] = (0.01, 1.0),
    samples_per_decade: int = 4,
    refine: bool = True,
    stability_tolerance: float = STABILITY_TOLERANCE,
) -> KernelBoundEstimate:
    """Smallest C with C^{-1} <= h_t / min{t^{-N/(2s)}, t/|x|^{N+2s}} <= C, and
    smallest C with p_t <= C t^{-N/(2s)}, over the scanned range.

    ``constant`` is the largest of 1 and both constants.  With ``refine`` the
    scan is repeated with twice the points and NumericalFailure is raised if
    the constant moves by more than ``stability_tolerance``.
    """
    t_lo, t_hi = map(float, t_range)
    if not (0 < t_lo and t_hi >= 100.0 * t_lo):
        raise ValidationError(f"estimate_bound_constant: t_range must span two decades (got {t_range})")
    grid = grid or GridSpec(params.dimension)
    _check_grid(params, grid)

    def geometric(lo, hi):
        count = max(2, int(round(samples_per_decade * np.log10(hi / lo))) + 1)
        return np.geomspace(lo, hi, count)

    times = geometric(t_lo, t_hi)
    mixed_times = geometric(*map(float, mixed_t_range))

    def constants(g):
        ratio_max, ratio_min, mixed = _scan_bound_ratios(params, g, times, mixed_times)
        fractional = max(ratio_max, 1.0 / ratio_min)
        return ratio_max, ratio_min, fractional, mixed, max(1.0, fractional, mixed)

    ratio_max, ratio_min, fractional, mixed, constant = constants(grid)
    refined_constant = None
    change = None
    if refine:
        refined_constant = constants(grid.refined())[-1]
        change = abs(refined_constant - constant) / constant
        logger.info("bound constant C=%.6g, refined C=%.6g (change %.2e)", constant, refined_constant, change)
        if change > stability_tolerance:
            raise NumericalFailure(
                f"bound constant does not stabilize under refinement: {constant:.4g} -> {refined_constant:.4g} "
                f"({change:.1%} > {stability_tolerance:.0%}); aliasing or t_range too wide"
            )

    return KernelBoundEstimate(
        constant=constant,
        fractional_constant=fractional,
        fractional_ratio_max=ratio_max,
        fractional_ratio_min=ratio_min,
        mixed_constant=mixed,
        t_range=(t_lo, t_hi),
        mixed_t_range=tuple(map(float, mixed_t_range)),
        x_max=grid.half_length / 2.0,
        refined_constant=refined_constant,
        relative_change=change,
    )
