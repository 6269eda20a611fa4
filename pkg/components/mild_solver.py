"""Mild solutions of u_t + L u = u^p on the periodic box.

The linear flow is applied exactly through the symbol exp(-h(|xi|^2 + |xi|^{2s})),
the power nonlinearity through exponential time differencing:

    etd1:  u+ = E u + h phi1(-sigma h) N(u)
    etd2:  a  = E u + h phi1(-sigma h) N(u)
           u+ = a + h phi2(-sigma h) (N(a) - N(u))

with E = exp(-sigma h), phi1(z) = (e^z - 1)/z, phi2(z) = (e^z - 1 - z)/z^2.
phi1 and phi2 are evaluated as contour means around z, which stays accurate
at z = 0 (the zero mode, where the scheme reduces to Euler / Heun).

Internally fields are kept with the origin at index 0 (``ifftshift`` layout);
the dx^N factors of the transform cancel between forward and inverse.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.fft
from scipy.integrate import simpson

from components.errors import NumericalFailure, ValidationError, require
from components.heat_kernels import ModelParams
from components.spectral_core import FFT_WORKERS, Field, GridSpec, apply_multiplier_array, mixed_exponent

logger = logging.getLogger(__name__)

SCHEMES = ("etd1", "etd2")
CONTOUR_POINTS = 32
NEGATIVITY_TOLERANCE = 1e-10
DEFAULT_LADDER_NODES = 33
QUADRATURE_TOLERANCE = 1e-6

GLOBAL = "GlobalWithinHorizon"
BLOW_UP = "BlowUpAt"
FAILURE = "NumericalFailureAt"


# ============================================================================
# Configuration
# ============================================================================


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping parameters.

    ``source=False`` drops the u^p term (linear runs used as a reference).
    ``snapshot_stride`` keeps every k-th state as a field snapshot (None keeps none).
    """

    exponent: float = 2.0
    dt: float = 1e-3
    horizon: float = 1.0
    blowup_threshold: float = 1e6
    scheme: str = "etd2"
    snapshot_stride: Optional[int] = None
    source: bool = True

    def __post_init__(self):
        require(
            [
                (self.dt > 0, f"dt must be > 0 (got {self.dt})"),
                (self.horizon > 0, f"horizon must be > 0 (got {self.horizon})"),
                (self.blowup_threshold > 0, f"blow-up threshold must be > 0 (got {self.blowup_threshold})"),
                (self.scheme in SCHEMES, f"scheme must be one of {SCHEMES} (got {self.scheme!r})"),
                (self.snapshot_stride is None or self.snapshot_stride >= 1,
                 f"snapshot stride must be >= 1 (got {self.snapshot_stride})"),
            ],
            "SolverConfig",
        )

    def check(self) -> "SolverConfig":
        """Validate the exponent; ``step`` alone accepts p = 1 as a test case."""
        if not self.exponent > 1.0:
            raise ValidationError(f"SolverConfig: p must be > 1 (got {self.exponent})")
        return self

    def describe(self) -> dict:
        return {
            "p": self.exponent,
            "dt": self.dt,
            "T": self.horizon,
            "U_max": self.blowup_threshold,
            "scheme": self.scheme,
            "snapshot_stride": self.snapshot_stride,
            "source": self.source,
        }


@dataclass(frozen=True)
class Trajectory:
    """Norm history of one run, optional snapshots, and how it ended."""

    grid: GridSpec
    params: ModelParams
    config: SolverConfig
    initial: Field
    times: np.ndarray = field(repr=False)
    sup_norms: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)
    tail_norms: np.ndarray = field(repr=False)
    outcome: str = GLOBAL
    event_time: Optional[float] = None
    snapshot_times: Optional[np.ndarray] = field(default=None, repr=False)
    snapshots: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def blew_up(self) -> bool:
        return self.outcome == BLOW_UP

    @property
    def t_star(self) -> Optional[float]:
        return self.event_time if self.outcome == BLOW_UP else None

    @property
    def max_sup_norm(self) -> float:
        finite = self.sup_norms[np.isfinite(self.sup_norms)]
        return float(np.max(finite)) if finite.size else float("nan")

    def describe_outcome(self) -> str:
        if self.outcome == GLOBAL:
            return GLOBAL
        return f"{self.outcome}({self.event_time:.6g})"

    def snapshot(self, index: int) -> Field:
        if self.snapshots is None:
            raise ValidationError("trajectory stores no snapshots")
        return Field(self.grid, self.snapshots[index])


@dataclass(frozen=True)
class IterationLadder:
    """Iterates u_0 .. u_n of u_{k+1} = u_0 + Phi u_k on a coarse time grid.

    ``iterates`` has shape (n+1, len(times), *grid.shape).
    """

    grid: GridSpec
    times: np.ndarray = field(repr=False)
    iterates: np.ndarray = field(repr=False)
    sup_norms: List[float] = field(default_factory=list)
    monotonicity_defects: List[float] = field(default_factory=list)
    increments: List[float] = field(default_factory=list)
    truncated: bool = False
    tolerance: float = QUADRATURE_TOLERANCE

    @property
    def depth(self) -> int:
        return self.iterates.shape[0] - 1

    @property
    def monotone(self) -> bool:
        return all(d <= self.tolerance for d in self.monotonicity_defects)


# ============================================================================
# Pointwise pieces
# ============================================================================


def ode_blowup_time(amplitude: float, p: float) -> float:
    """Blow-up time a^{1-p}/(p-1) of u' = u^p, u(0) = a."""
    return amplitude ** (1.0 - p) / (p - 1.0)


def power(u: np.ndarray, p: float) -> np.ndarray:
    """u^p, with max(u, 0) for non-integer p."""
    if float(p).is_integer():
        return u ** int(p)
    return np.maximum(u, 0.0) ** p


def tail_weight(grid: GridSpec, params: ModelParams) -> np.ndarray:
    return 1.0 / (1.0 + grid.radius ** (grid.dimension + 2.0 * params.order))


def tail_norm(u: Field, params: ModelParams) -> float:
    """Quadrature of |u(x)| / (1 + |x|^{N+2s}) over the box."""
    return float(np.sum(np.abs(u.values) * tail_weight(u.grid, params)) * u.grid.cell_volume)


def _check_compatible(u: Field, params: ModelParams) -> None:
    if u.grid.dimension != params.dimension:
        raise ValidationError(f"field has N={u.grid.dimension} but ModelParams has N={params.dimension}")


def propagate_linear(u: Field, dt: float, params: ModelParams) -> Field:
    """e^{-dt L} u, i.e. p_dt * u, by multiplying the spectrum with the symbol."""
    if not (np.isfinite(dt) and dt >= 0):
        raise ValidationError(f"propagate_linear: dt must be >= 0 (got {dt})")
    _check_compatible(u, params)
    if dt == 0:
        return u
    multiplier = np.exp(-dt * mixed_exponent(u.grid, params.order))
    return Field(u.grid, apply_multiplier_array(u.values, multiplier, u.grid))


# ============================================================================
# Exponential integrator
# ============================================================================


class _ETDCoefficients:
    """E, h*phi1 and h*phi2 on the grid for one step size."""

    def __init__(self, grid: GridSpec, s: float, h: float, points: int = CONTOUR_POINTS):
        sigma = mixed_exponent(grid, s)
        z = -sigma * h
        self.h = h
        self.decay = np.exp(z)
        phi1 = np.zeros_like(z)
        phi2 = np.zeros_like(z)
        roots = np.exp(1j * np.pi * (np.arange(1, points + 1) - 0.5) / points)
        for r in roots:
            w = z + r
            ew = np.exp(w)
            phi1 += ((ew - 1.0) / w).real
            phi2 += ((ew - 1.0 - w) / w**2).real
        self.phi1 = h * phi1 / points
        self.phi2 = h * phi2 / points


class _Stepper:
    """Advances a state held both in physical and spectral form."""

    def __init__(self, grid: GridSpec, params: ModelParams, config: SolverConfig):
        self.grid = grid
        self.s = params.order
        self.p = config.exponent
        self.scheme = config.scheme
        self.source = config.source
        self._cache: Dict[float, _ETDCoefficients] = {}

    def coefficients(self, h: float) -> _ETDCoefficients:
        if h not in self._cache:
            self._cache[h] = _ETDCoefficients(self.grid, self.s, h)
        return self._cache[h]

    def _fft(self, v):
        return scipy.fft.fftn(v, workers=FFT_WORKERS)

    def _ifft(self, v):
        return scipy.fft.ifftn(v, workers=FFT_WORKERS).real

    def advance(self, v: np.ndarray, v_hat: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
        c = self.coefficients(h)
        linear = c.decay * v_hat
        if not self.source:
            return self._ifft(linear), linear
        n_hat = self._fft(power(v, self.p))
        a_hat = linear + c.phi1 * n_hat
        if self.scheme == "etd1":
            return self._ifft(a_hat), a_hat
        a = self._ifft(a_hat)
        na_hat = self._fft(power(a, self.p))
        out_hat = a_hat + c.phi2 * (na_hat - n_hat)
        return self._ifft(out_hat), out_hat


def step(u: Field, dt: float, config: SolverConfig, params: ModelParams) -> Field:
    """One exponential-integrator step of size ``dt``.

    The exponent is not validated here, so p = 1 can be used to check the
    linear-growth case.  A non-finite result raises NumericalFailure.
    """
    if not dt > 0:
        raise ValidationError(f"step: dt must be > 0 (got {dt})")
    _check_compatible(u, params)
    stepper = _Stepper(u.grid, params, config)
    v = scipy.fft.ifftshift(u.values)
    out, _ = stepper.advance(v, stepper._fft(v), dt)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure(f"step: non-finite values after a step of {dt:g}")
    return Field(u.grid, scipy.fft.fftshift(out))


def _check_initial(u0: Field, config: SolverConfig, params: ModelParams) -> None:
    _check_compatible(u0, params)
    sup = u0.sup_norm()
    problems = []
    if np.min(u0.values) < -NEGATIVITY_TOLERANCE * max(sup, 1e-300):
        problems.append("initial datum must be >= 0")
    if sup >= config.blowup_threshold:
        problems.append(f"blow-up threshold {config.blowup_threshold:g} must exceed sup|u0| = {sup:g}")
    if problems:
        raise ValidationError("run: " + "; ".join(problems), problems)


def run(u0: Field, config: SolverConfig, params: ModelParams) -> Trajectory:
    """March from u0 to the horizon, or until blow-up or numerical failure.

    Blow-up is declared at the first step where sup|u| >= U_max; that step is
    redone as two half steps and the midpoint of the half containing the
    crossing is returned as t*.
    """
    config.check()
    _check_initial(u0, config, params)
    grid = u0.grid
    stepper = _Stepper(grid, params, config)
    weight = scipy.fft.ifftshift(tail_weight(grid, params))
    dv = grid.cell_volume

    n_steps = max(1, int(math.ceil(config.horizon / config.dt - 1e-9)))
    v = scipy.fft.ifftshift(u0.values)
    v_hat = stepper._fft(v)

    times = [0.0]
    sups = [float(np.max(np.abs(v)))]
    masses = [float(np.sum(v) * dv)]
    tails = [float(np.sum(np.abs(v) * weight) * dv)]
    stride = config.snapshot_stride
    snap_times = [0.0] if stride else None
    snaps = [u0.values.copy()] if stride else None

    outcome, event_time = GLOBAL, None
    t = 0.0
    for k in range(1, n_steps + 1):
        h = config.dt if k < n_steps else config.horizon - (n_steps - 1) * config.dt
        new_v, new_hat = stepper.advance(v, v_hat, h)
        t_new = (k - 1) * config.dt + h

        if not np.all(np.isfinite(new_v)):
            outcome, event_time = FAILURE, t_new
            times.append(t_new)
            sups.append(float("inf"))
            masses.append(float("nan"))
            tails.append(float("nan"))
            logger.warning("run: non-finite values at t=%.6g", t_new)
            break

        sup = float(np.max(np.abs(new_v)))
        times.append(t_new)
        sups.append(sup)
        masses.append(float(np.sum(new_v) * dv))
        tails.append(float(np.sum(np.abs(new_v) * weight) * dv))

        if sup >= config.blowup_threshold:
            mid_v, _ = stepper.advance(v, v_hat, 0.5 * h)
            crossed_early = np.all(np.isfinite(mid_v)) and np.max(np.abs(mid_v)) >= config.blowup_threshold
            outcome = BLOW_UP
            event_time = t + (0.25 if crossed_early else 0.75) * h
            logger.info("run: sup-norm crossed %.3g, blow-up declared at t*=%.6g", config.blowup_threshold, event_time)
            break

        if np.min(new_v) < -NEGATIVITY_TOLERANCE * sup:
            outcome, event_time = FAILURE, t_new
            logger.warning("run: negative values %.3e below ringing tolerance at t=%.6g", np.min(new_v), t_new)
            break

        v, v_hat, t = new_v, new_hat, t_new
        if stride and (k % stride == 0 or k == n_steps):
            snap_times.append(t)
            snaps.append(scipy.fft.fftshift(v))

    return Trajectory(
        grid=grid,
        params=params,
        config=config,
        initial=u0,
        times=np.asarray(times),
        sup_norms=np.asarray(sups),
        masses=np.asarray(masses),
        tail_norms=np.asarray(tails),
        outcome=outcome,
        event_time=event_time,
        snapshot_times=np.asarray(snap_times) if stride else None,
        snapshots=np.stack(snaps) if stride else None,
    )


# ============================================================================
# Picard ladder
# ============================================================================


def _duhamel(values_p: np.ndarray, times: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Phi at every node: trapezoid in tau of exp(-(t_i - tau_j) sigma) applied to u^p(tau_j).

    ``values_p`` holds u^p per node in shifted layout, shape (K, *grid.shape).
    """
    spectra = scipy.fft.fftn(values_p, axes=tuple(range(1, values_p.ndim)), workers=FFT_WORKERS)
    out = np.zeros_like(values_p)
    for i in range(1, len(times)):
        acc = np.zeros(spectra.shape[1:], dtype=complex)
        for j in range(i + 1):
            if j == 0 or j == i:
                w = 0.5 * (times[1] - times[0]) if j == 0 else 0.5 * (times[i] - times[i - 1])
            else:
                w = 0.5 * (times[j + 1] - times[j - 1])
            acc += w * np.exp(-(times[i] - times[j]) * sigma) * spectra[j]
        out[i] = scipy.fft.ifftn(acc, workers=FFT_WORKERS).real
    return out


def picard_iterate(
    u0: Field,
    times: Optional[np.ndarray],
    n_iters: int,
    config: SolverConfig,
    params: ModelParams,
    tolerance: float = QUADRATURE_TOLERANCE,
) -> IterationLadder:
    """u_0(t) = e^{-tL} u0 and u_{k+1} = u_0 + Phi u_k, Phi evaluated by the
    trapezoid rule on ``times`` (default: 33 nodes on [0, horizon]).

    An iterate whose sup-norm exceeds the blow-up threshold ends the ladder
    with ``truncated=True``.
    """
    config.check()
    _check_initial(u0, config, params)
    if n_iters < 1:
        raise ValidationError(f"picard_iterate: n_iters must be >= 1 (got {n_iters})")
    times = np.linspace(0.0, config.horizon, DEFAULT_LADDER_NODES) if times is None else np.asarray(times, float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0) or times[-1] > config.horizon * (1 + 1e-12):
        raise ValidationError("picard_iterate: times must start at 0, increase, and stay within the horizon")

    grid = u0.grid
    sigma = mixed_exponent(grid, params.order)
    v0 = scipy.fft.ifftshift(u0.values)
    v0_hat = scipy.fft.fftn(v0, workers=FFT_WORKERS)
    base = np.stack([scipy.fft.ifftn(np.exp(-t * sigma) * v0_hat, workers=FFT_WORKERS).real for t in times])

    iterates = [base]
    sups = [float(np.max(np.abs(base)))]
    defects: List[float] = []
    increments: List[float] = []
    truncated = False
    p = config.exponent
    for k in range(n_iters):
        nxt = base + _duhamel(power(iterates[-1], p), times, sigma)
        sup = float(np.max(np.abs(nxt))) if np.all(np.isfinite(nxt)) else float("inf")
        if sup > config.blowup_threshold:
            logger.warning("picard_iterate: iterate %d exceeds %.3g, ladder truncated", k + 1, config.blowup_threshold)
            truncated = True
            break
        defects.append(float(max(0.0, np.max(iterates[-1] - nxt))))
        increments.append(float(np.max(np.abs(nxt - iterates[-1]))))
        iterates.append(nxt)
        sups.append(sup)

    stacked = scipy.fft.fftshift(np.stack(iterates), axes=tuple(range(2, 2 + grid.dimension)))
    return IterationLadder(
        grid=grid,
        times=times,
        iterates=stacked,
        sup_norms=sups,
        monotonicity_defects=defects,
        increments=increments,
        truncated=truncated,
        tolerance=tolerance,
    )


# ============================================================================
# Mild-form residual
# ============================================================================


@dataclass(frozen=True)
class ResidualReport:
    max_relative_defect: float
    worst_time: float
    checked_times: List[float]
    defects: List[float]

    def as_dict(self) -> dict:
        return {
            "max_relative_defect": self.max_relative_defect,
            "worst_time": self.worst_time,
            "checked_times": self.checked_times,
            "defects": self.defects,
        }


def mild_residual(
    traj: Trajectory,
    sample_points: Optional[np.ndarray] = None,
    params: Optional[ModelParams] = None,
    config: Optional[SolverConfig] = None,
    max_times: int = 8,
) -> ResidualReport:
    """Recompute e^{-tL}u0 + int_0^t e^{-(t-tau)L} u^p(tau) dtau from the stored
    snapshots (Simpson rule in tau) and compare with the stored u(t).

    ``sample_points`` is a boolean mask or index array selecting grid points
    (default: all).  The defect at time t is max|u - rhs| / max|u| over the
    selected points, and 0 when u vanishes there.
    """
    params = params or traj.params
    config = config or traj.config
    if traj.snapshots is None or len(traj.snapshot_times) < 3:
        raise ValidationError("mild_residual: need at least 3 snapshots (run with snapshot_stride set)")
    grid = traj.grid
    axes = tuple(range(1, 1 + grid.dimension))
    tau = traj.snapshot_times
    sigma = mixed_exponent(grid, params.order)
    spectra = scipy.fft.fftn(scipy.fft.ifftshift(traj.snapshots, axes=axes), axes=axes, workers=FFT_WORKERS)
    source_spectra = None
    if config.source:
        source = power(scipy.fft.ifftshift(traj.snapshots, axes=axes), config.exponent)
        source_spectra = scipy.fft.fftn(source, axes=axes, workers=FFT_WORKERS)

    candidates = np.arange(2, len(tau))
    chosen = np.unique(np.linspace(0, len(candidates) - 1, min(max_times, len(candidates))).round().astype(int))
    mask = np.ones(grid.shape, bool) if sample_points is None else np.zeros(grid.shape, bool)
    if sample_points is not None:
        mask[np.asarray(sample_points)] = True

    defects, checked = [], []
    for i in candidates[chosen]:
        t = tau[i]
        rhs_hat = np.exp(-t * sigma) * spectra[0]
        if source_spectra is not None:
            decay = np.exp(-(t - tau[: i + 1]).reshape((-1,) + (1,) * grid.dimension) * sigma)
            integrand = decay * source_spectra[: i + 1]
            rhs_hat = rhs_hat + simpson(integrand.real, x=tau[: i + 1], axis=0) + 1j * simpson(
                integrand.imag, x=tau[: i + 1], axis=0
            )
        rhs = scipy.fft.fftshift(scipy.fft.ifftn(rhs_hat, workers=FFT_WORKERS).real)
        u = traj.snapshots[i]
        scale = float(np.max(np.abs(u[mask])))
        defect = float(np.max(np.abs(u - rhs)[mask])) / scale if scale > 0 else 0.0
        defects.append(defect)
        checked.append(float(t))

    worst = int(np.argmax(defects))
    return ResidualReport(
        max_relative_defect=defects[worst],
        worst_time=checked[worst],
        checked_times=checked,
        defects=defects,
    )
