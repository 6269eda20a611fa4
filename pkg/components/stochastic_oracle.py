"""Monte Carlo construction of p_t as the law of W_t + J_t.

W_t is Brownian motion with generator Laplacian (variance 2t per component)
and J_t a symmetric (2s)-stable Levy flight with characteristic function
exp(-t|xi|^{2s}).  The empirical law is binned on the grid box and compared
with the spectral kernel by a binned Kolmogorov-Smirnov distance.

Design decisions:

* 1-D stable variates come from the Chambers-Mallows-Stuck transform, with
  the alpha = 1 (Cauchy) branch written out.  In N >= 2 the isotropic flight
  is sub-Gaussian, J = sqrt(2A) Z with A a positive s-stable variable
  (Kanter's representation) and Z standard normal.
* Samples are drawn in fixed-size chunks.  Chunk i uses the i-th child of
  ``SeedSequence(seed).spawn(n_chunks)`` with a PCG64 generator, so the
  output depends only on (seed, count, chunk_size), never on the number of
  worker threads.
* Samples outside the box go to the tail fraction; nothing is clamped.
  With ``wrap=True`` each coordinate is reduced modulo the box period
  first.  The box kernel is the periodization of p_t, which is exactly the
  law of the wrapped variable, so the comparison then carries no
  truncation error.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import j1
from scipy.stats import kstwo

from components.errors import ValidationError, require
from components.heat_kernels import KernelField
from components.spectral_core import GridSpec, forward_array

logger = logging.getLogger(__name__)

MIN_SAMPLES = 10_000
CHUNK_SIZE = 2**16
DEFAULT_WORKERS = min(4, os.cpu_count() or 1)
CF_FREQUENCIES = (0.5, 1.0, 2.0)


# ============================================================================
# Configuration and result types
# ============================================================================


@dataclass(frozen=True)
class SamplerConfig:
    order: float
    t: float
    count: int
    seed: int
    bin_width: float
    dimension: int = 1
    chunk_size: int = CHUNK_SIZE
    workers: int = DEFAULT_WORKERS

    def __post_init__(self):
        require(
            [
                (0.0 < self.order < 1.0, f"s must lie in (0, 1) (got {self.order})"),
                (np.isfinite(self.t) and self.t >= 0.0, f"t must be >= 0 (got {self.t})"),
                (int(self.count) == self.count and self.count >= MIN_SAMPLES,
                 f"count must be an integer >= {MIN_SAMPLES} (got {self.count})"),
                (int(self.seed) == self.seed and 0 <= self.seed < 2**64, f"seed must fit in 64 bits (got {self.seed})"),
                (self.bin_width > 0, f"bin width must be > 0 (got {self.bin_width})"),
                (self.dimension in (1, 2, 3), f"dimension must be 1, 2 or 3 (got {self.dimension})"),
                (self.chunk_size >= 1, f"chunk_size must be >= 1 (got {self.chunk_size})"),
                (self.workers >= 1, f"workers must be >= 1 (got {self.workers})"),
            ],
            "SamplerConfig",
        )


@dataclass(frozen=True)
class EmpiricalDensity:
    """Binned empirical law.

    In 1-D the bins are the grid cells [x_j - dx/2, x_j + dx/2); in N >= 2 the
    bins are radial shells on [0, R).  ``left_tail_fraction`` is the part of
    ``tail_fraction`` below the first edge (always 0 for radial bins).
    """

    edges: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    count: int
    tail_fraction: float
    left_tail_fraction: float = 0.0
    radial: bool = False
    config: Optional[SamplerConfig] = None
    wrapped: bool = False

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        probabilities = np.asarray(self.probabilities, dtype=float)
        problems = []
        if edges.ndim != 1 or probabilities.shape != (edges.size - 1,):
            problems.append("need len(edges) == len(probabilities) + 1")
        if np.any(probabilities < 0):
            problems.append("negative bin probability")
        if self.count > 0 and abs(probabilities.sum() + self.tail_fraction - 1.0) > 1e-9:
            problems.append("probabilities and tail fraction do not sum to 1")
        if problems:
            raise ValidationError("EmpiricalDensity: " + "; ".join(problems), problems)
        edges.setflags(write=False)
        probabilities.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "probabilities", probabilities)

    def cdf_at_edges(self) -> np.ndarray:
        """Empirical CDF at every edge, left tail included."""
        return self.left_tail_fraction + np.concatenate([[0.0], np.cumsum(self.probabilities)])

    def metadata(self) -> dict:
        meta = {"count": self.count, "tail_fraction": self.tail_fraction, "radial": self.radial,
                "wrapped": self.wrapped}
        if self.config is not None:
            meta.update({"seed": self.config.seed, "s": self.config.order, "t": self.config.t,
                         "N": self.config.dimension, "bin_width": self.config.bin_width})
        return meta


# ============================================================================
# Variate generators
# ============================================================================


def _chunk_generators(seed: int, count: int, chunk_size: int) -> List[Tuple[np.random.Generator, int]]:
    sizes = [chunk_size] * (count // chunk_size)
    if count % chunk_size:
        sizes.append(count % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return [(np.random.Generator(np.random.PCG64(child)), size) for child, size in zip(children, sizes)]


def _symmetric_stable_1d(rng: np.random.Generator, alpha: float, size: int) -> np.ndarray:
    """Standard symmetric alpha-stable variates, characteristic function exp(-|xi|^alpha)."""
    phi = np.pi * (rng.random(size) - 0.5)
    if abs(alpha - 1.0) < 1e-12:
        return np.tan(phi)
    w = rng.standard_exponential(size)
    return (
        np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    )


def _positive_stable(rng: np.random.Generator, a: float, size: int) -> np.ndarray:
    """Positive a-stable variates with Laplace transform exp(-lambda^a), 0 < a < 1."""
    u = np.pi * rng.random(size)
    e = rng.standard_exponential(size)
    return (
        np.sin(a * u) / np.sin(u) ** (1.0 / a)
        * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    )


def _stable_chunk(rng: np.random.Generator, s: float, t: float, size: int, dimension: int) -> np.ndarray:
    scale = t ** (1.0 / (2.0 * s))
    if dimension == 1:
        return scale * _symmetric_stable_1d(rng, 2.0 * s, size)
    a = _positive_stable(rng, s, size)
    z = rng.standard_normal((size, dimension))
    return scale * np.sqrt(2.0 * a)[:, None] * z


def _map_chunks(function, chunks, workers: int) -> list:
    if workers == 1 or len(chunks) == 1:
        return [function(rng, size) for rng, size in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map keeps chunk order
        return list(pool.map(lambda chunk: function(*chunk), chunks))


def sample_stable(
    s: float,
    t: float,
    count: int,
    seed: int,
    dimension: int = 1,
    chunk_size: int = CHUNK_SIZE,
    workers: int = DEFAULT_WORKERS,
) -> np.ndarray:
    """Samples of J_t, characteristic function exp(-t|xi|^{2s}).

    Shape (count,) in 1-D and (count, N) otherwise.  t = 0 gives exact zeros.
    """
    require(
        [
            (0.0 < s < 1.0, f"s must lie in (0, 1) (got {s})"),
            (np.isfinite(t) and t >= 0.0, f"t must be >= 0 (got {t})"),
            (count >= 1, f"count must be >= 1 (got {count})"),
            (dimension in (1, 2, 3), f"dimension must be 1, 2 or 3 (got {dimension})"),
        ],
        "sample_stable",
    )
    shape = (count,) if dimension == 1 else (count, dimension)
    if t == 0.0:
        return np.zeros(shape)
    chunks = _chunk_generators(seed, count, chunk_size)
    parts = _map_chunks(lambda rng, size: _stable_chunk(rng, s, t, size, dimension), chunks, workers)
    return np.concatenate(parts, axis=0)


def characteristic_function_check(
    samples: np.ndarray, s: float, t: float, frequencies=CF_FREQUENCIES, direction: int = 0
) -> List[dict]:
    """Mean of cos(xi X) against exp(-t|xi|^{2s}) with its standard error.

    For N >= 2 samples the projection on coordinate ``direction`` is used.
    """
    x = samples if samples.ndim == 1 else samples[:, direction]
    rows = []
    for xi in frequencies:
        c = np.cos(xi * x)
        empirical = float(np.mean(c))
        expected = float(np.exp(-t * abs(xi) ** (2.0 * s)))
        stderr = float(np.std(c, ddof=1) / np.sqrt(x.size)) if x.size > 1 else np.inf
        z = (empirical - expected) / stderr if stderr > 0 else (0.0 if empirical == expected else np.inf)
        rows.append({"xi": xi, "empirical": empirical, "expected": expected, "stderr": stderr, "z": z})
    return rows


# ============================================================================
# Histograms of W_t + J_t
# ============================================================================


def _edges_for(grid: GridSpec, bin_width: float) -> np.ndarray:
    if grid.dimension == 1:
        if np.isclose(bin_width, grid.spacing):
            return np.concatenate([grid.axis - 0.5 * grid.spacing, [grid.axis[-1] + 0.5 * grid.spacing]])
        n_bins = max(1, int(np.floor(2.0 * grid.half_length / bin_width)))
        return -grid.half_length + bin_width * np.arange(n_bins + 1)
    n_bins = max(1, int(np.floor(grid.half_length / bin_width)))
    return bin_width * np.arange(n_bins + 1)


def _bin_chunk(samples: np.ndarray, edges: np.ndarray) -> Tuple[np.ndarray, int, int]:
    """Integer counts per bin, count below the first edge, count at or above the last."""
    values = samples if samples.ndim == 1 else np.linalg.norm(samples, axis=1)
    counts, _ = np.histogram(values, bins=edges)
    below = int(np.count_nonzero(values < edges[0]))
    above = int(np.count_nonzero(values >= edges[-1]))
    # np.histogram closes the last bin on the right; move that edge case to the tail
    on_edge = int(np.count_nonzero(values == edges[-1]))
    counts[-1] -= on_edge
    return counts.astype(np.int64), below, above


def sample_mixed_process(
    s: float,
    t: float,
    count: int,
    seed: int,
    grid: Optional[GridSpec] = None,
    bin_width: Optional[float] = None,
    chunk_size: int = CHUNK_SIZE,
    workers: int = DEFAULT_WORKERS,
    wrap: bool = False,
) -> EmpiricalDensity:
    """Histogram of W_t + J_t over the grid box (radial shells when N >= 2).

    ``wrap`` folds every sample into the box before binning, giving the law
    that the periodic box kernel describes.
    """
    grid = grid or GridSpec(1)
    config = SamplerConfig(
        order=s, t=t, count=count, seed=seed,
        bin_width=bin_width if bin_width is not None else grid.spacing,
        dimension=grid.dimension, chunk_size=chunk_size, workers=workers,
    )
    edges = _edges_for(grid, config.bin_width)
    N = grid.dimension
    period = 2.0 * grid.half_length
    lower = edges[0] if N == 1 else -grid.half_length

    def draw(rng, size):
        jumps = _stable_chunk(rng, s, t, size, N) if t > 0 else np.zeros((size,) if N == 1 else (size, N))
        brownian = np.sqrt(2.0 * t) * rng.standard_normal(jumps.shape)
        samples = jumps + brownian
        if wrap:
            samples = lower + np.mod(samples - lower, period)
        return _bin_chunk(samples, edges)

    chunks = _chunk_generators(seed, count, config.chunk_size)
    results = _map_chunks(draw, chunks, config.workers)
    counts = sum(r[0] for r in results)
    below = sum(r[1] for r in results)
    above = sum(r[2] for r in results)
    tail = (below + above) / count
    logger.debug("mixed process s=%g t=%g: %d samples, tail fraction %.3e", s, t, count, tail)
    return EmpiricalDensity(
        edges=edges,
        probabilities=counts / count,
        count=count,
        tail_fraction=tail,
        left_tail_fraction=below / count,
        radial=N > 1,
        config=config,
        wrapped=wrap,
    )


def sample_from_kernel(k: KernelField, count: int, seed: int) -> EmpiricalDensity:
    """Histogram drawn from the kernel's own discrete law (mass values*dx per cell), 1-D only."""
    if k.grid.dimension != 1:
        raise ValidationError("sample_from_kernel: only 1-D kernels are supported")
    if count < 1:
        raise ValidationError(f"sample_from_kernel: count must be >= 1 (got {count})")
    weights = np.clip(k.values, 0.0, None) * k.grid.spacing
    weights = weights / weights.sum()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    counts = rng.multinomial(count, weights)
    return EmpiricalDensity(
        edges=_edges_for(k.grid, k.grid.spacing),
        probabilities=counts / count,
        count=count,
        tail_fraction=0.0,
    )


# ============================================================================
# Comparison
# ============================================================================


@dataclass(frozen=True)
class DensityComparison:
    ks_distance: float
    max_abs_z: float
    bin_count: int
    sample_count: int
    ks_critical_95: float

    @property
    def passes_ks(self) -> bool:
        return self.ks_distance <= self.ks_critical_95

    def as_dict(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "max_abs_z": self.max_abs_z,
            "bin_count": self.bin_count,
            "sample_count": self.sample_count,
            "ks_critical_95": self.ks_critical_95,
        }


def ks_critical_value(count: int, level: float = 0.95) -> float:
    """Kolmogorov critical value for ``count`` samples (about 1.36/sqrt(count) at 95%)."""
    return float(kstwo.ppf(level, count))


def radial_cdf(k: KernelField, radii: np.ndarray) -> np.ndarray:
    """Kernel mass inside |x| <= r for each r (2-D, r <= R), from the spectrum.

    Sums (2R)^{-2} sum_k K(xi_k) 2 pi r J1(r|xi_k|)/|xi_k|, the transform of the
    disc indicator, so pixelization of the disc never enters.
    """
    grid = k.grid
    if grid.dimension != 2:
        raise ValidationError("radial_cdf: only N = 2 is supported")
    spectrum = forward_array(k.values, grid).real.ravel()
    xi = grid.wavenumber_magnitude.ravel()
    keep = np.abs(spectrum) > 1e-300
    spectrum, xi = spectrum[keep], xi[keep]
    out = np.empty(len(radii))
    for i, r in enumerate(radii):
        with np.errstate(invalid="ignore", divide="ignore"):
            disc = np.where(xi > 0, 2.0 * np.pi * r * j1(r * xi) / xi, np.pi * r**2)
        out[i] = float(np.sum(spectrum * disc)) / grid.box_volume
    return out


def _kernel_bin_probabilities(e: EmpiricalDensity, k: KernelField) -> np.ndarray:
    grid = k.grid
    if not e.radial:
        if grid.dimension != 1:
            raise ValidationError("compare_density: linear bins need a 1-D kernel")
        expected_edges = _edges_for(grid, grid.spacing)
        if e.edges.shape != expected_edges.shape or not np.allclose(e.edges, expected_edges):
            raise ValidationError("compare_density: bins must coincide with the kernel's grid cells")
        return k.values * grid.spacing
    if grid.dimension != 2:
        raise ValidationError("compare_density: radial comparison is implemented for N = 2")
    if e.edges[0] != 0.0 or e.edges[-1] > grid.half_length * (1 + 1e-12):
        raise ValidationError("compare_density: radial bins must start at 0 and stay inside the box")
    return np.diff(radial_cdf(k, e.edges))


def compare_density(e: EmpiricalDensity, k: KernelField) -> DensityComparison:
    """Binned KS distance and per-bin z-scores between a histogram and a kernel."""
    if e.count <= 0:
        raise ValidationError("compare_density: empty density (zero samples)")
    expected = _kernel_bin_probabilities(e, k)
    expected_cdf = np.concatenate([[0.0], np.cumsum(expected)])
    ks = float(np.max(np.abs(e.cdf_at_edges() - expected_cdf)))

    variance = expected * (1.0 - expected) / e.count
    usable = expected * e.count >= 5.0
    z = np.zeros_like(expected)
    z[usable] = (e.probabilities[usable] - expected[usable]) / np.sqrt(variance[usable])
    return DensityComparison(
        ks_distance=ks,
        max_abs_z=float(np.max(np.abs(z))) if np.any(usable) else 0.0,
        bin_count=int(expected.size),
        sample_count=int(e.count),
        ks_critical_95=ks_critical_value(e.count),
    )
