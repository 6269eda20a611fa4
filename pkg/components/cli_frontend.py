"""Command-line surface: configuration parsing and command execution.

Configuration comes from, in increasing precedence: built-in defaults, the
``FUJITA_LAB_OUTPUT`` environment variable (output directory only), a flat
``key = value`` file (``#`` starts a comment) and ``--key value`` flags.
Where each value came from is kept in ``RunConfig.provenance`` and written
to the manifest.

Exit codes: 0 success, 1 invalid configuration or input, 2 numerical
failure, 3 a verified property outside its tolerance.
"""

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from components import artifacts
from components.errors import LabError, NumericalFailure, PropertyCheckFailure, ValidationError
from components.fujita_lab import (
    DATUM_KINDS,
    DEFAULT_RADII,
    SweepCell,
    TestFunctionFamily,
    blowup_monotonicity,
    critical_exponent,
    delta_schedule,
    delta_threshold,
    dichotomy_sweep,
    nonexistence_certificate,
    small_initial_datum,
    tau0_lower_bound,
)
from components.heat_kernels import (
    KERNEL_KINDS,
    ModelParams,
    aliasing_estimate,
    compare_with_poisson,
    estimate_bound_constant,
    kernel,
    verify_kernel_properties,
)
from components.lab_logging import setup_logging
from components.mild_solver import FAILURE, SCHEMES, SolverConfig, run
from components.spectral_core import Field, GridSpec
from components.stochastic_oracle import MIN_SAMPLES, compare_density, sample_mixed_process

logger = logging.getLogger(__name__)

COMMANDS = ("kernel", "verify", "oracle", "solve", "schedule", "sweep", "certificate")
ROUTES = ("both", "symbol", "convolution")
OUTPUT_ENV = "FUJITA_LAB_OUTPUT"
DEFAULT_OUTPUT = "output"
KS_TOLERANCE = 0.01
CERTIFICATE_SNAPSHOTS = 64

EXIT_OK = 0
EXIT_PROPERTY = PropertyCheckFailure.exit_code


# ============================================================================
# RunConfig
# ============================================================================


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run configuration; the key names are the flag names."""

    command: str
    N: int = 1
    s: float = 0.5
    R: float = 40.0
    n: Optional[int] = None
    kind: str = "mixed"
    route: str = "both"
    t: float = 1.0
    tau: Optional[float] = None
    p: float = 2.0
    dt: float = 1e-3
    T: float = 1.0
    U_max: float = 1e6
    scheme: str = "etd2"
    snapshot_stride: Optional[int] = None
    datum: str = "uniform"
    amplitude: float = 1.0
    delta0: Optional[float] = None
    tau0: Optional[float] = None
    C: Optional[float] = None
    tau0_factor: float = 2.0
    count: int = 1_000_000
    seed: int = 0
    bin_width: Optional[float] = None
    p_values: Tuple[float, ...] = (1.2, 1.5, 2.0)
    amplitudes: Tuple[float, ...] = (0.5, 1.0, 2.0)
    radii: Tuple[float, ...] = DEFAULT_RADII
    beta: float = 1.0
    workers: int = 1
    output: str = DEFAULT_OUTPUT
    format_version: str = artifacts.FORMAT_VERSION
    provenance: dict = field(default_factory=dict, compare=False, repr=False)

    def grid(self) -> GridSpec:
        return GridSpec(self.N, self.R, self.n)

    def params(self) -> ModelParams:
        return ModelParams(self.N, self.s)

    def solver_config(self, **overrides) -> SolverConfig:
        cfg = SolverConfig(
            exponent=self.p,
            dt=self.dt,
            horizon=self.T,
            blowup_threshold=self.U_max,
            scheme=self.scheme,
            snapshot_stride=self.snapshot_stride,
        )
        return replace(cfg, **overrides)

    def as_dict(self) -> dict:
        values = asdict(self)
        values.pop("provenance")
        return values

    def to_text(self) -> str:
        """Serialized form accepted back by ``parse_config`` as a config file."""
        lines = [f"# format_version {self.format_version}"]
        for name, value in self.as_dict().items():
            if isinstance(value, tuple):
                text = ",".join(artifacts.format_value(v) for v in value)
            else:
                text = artifacts.format_value(value)
            lines.append(f"{name} = {text}")
        return "\n".join(lines) + "\n"


def _text(value: str) -> str:
    return value.strip()


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def wrapped(value: str):
        value = value.strip()
        if value == "" or value.lower() == "none":
            return None
        return parse(value)

    return wrapped


def _integer(value: str) -> int:
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"not an integer: {value!r}")
    return int(number)


def _floats(value: str) -> Tuple[float, ...]:
    items = [v.strip() for v in value.split(",") if v.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(v) for v in items)


def _tau0(value: str):
    value = value.strip()
    if value.lower() == "auto":
        return "auto"
    return _optional(float)(value)


# key -> (parser, help)
OPTIONS: Dict[str, Tuple[Callable[[str], Any], str]] = {
    "command": (_text, f"one of {', '.join(COMMANDS)}"),
    "N": (_integer, "dimension (1-3)"),
    "s": (float, "order of the fractional part, in (0, 1)"),
    "R": (float, "box half-length"),
    "n": (_optional(_integer), "points per axis (even, >= 8); default depends on N"),
    "kind": (_text, f"kernel kind: {', '.join(KERNEL_KINDS)}"),
    "route": (_text, f"mixed kernel route: {', '.join(ROUTES)}"),
    "t": (float, "kernel time"),
    "tau": (_optional(float), "second kernel time for the semigroup check"),
    "p": (float, "nonlinearity exponent"),
    "dt": (float, "time step"),
    "T": (float, "time horizon"),
    "U_max": (float, "blow-up threshold on the sup-norm"),
    "scheme": (_text, f"time stepper: {', '.join(SCHEMES)}"),
    "snapshot_stride": (_optional(_integer), "keep every k-th state as a snapshot"),
    "datum": (_text, f"initial datum: {', '.join(DATUM_KINDS)}"),
    "amplitude": (float, "uniform datum level / small datum multiple of delta0*"),
    "delta0": (_optional(float), "delta_0 of the schedule and small datum"),
    "tau0": (_tau0, "kernel shift of the small datum, or 'auto'"),
    "C": (_optional(float), "kernel bound constant (estimated when absent and needed)"),
    "tau0_factor": (float, "tau0 = factor * tau0_lower_bound when resolved automatically"),
    "count": (_integer, "Monte Carlo sample count"),
    "seed": (_integer, "random seed"),
    "bin_width": (_optional(float), "histogram bin width (default: grid spacing)"),
    "p_values": (_floats, "sweep exponents, comma separated"),
    "amplitudes": (_floats, "sweep amplitudes, comma separated"),
    "radii": (_floats, "certificate radii, comma separated"),
    "beta": (float, "spatial stretch of the test functions"),
    "workers": (_integer, "worker threads"),
    "output": (_text, f"output directory (default ${OUTPUT_ENV} or {DEFAULT_OUTPUT})"),
    "format_version": (_text, "artifact format version"),
}


def _validate(values: dict) -> List[str]:
    errors = []

    def check(ok: bool, message: str):
        if not ok:
            errors.append(message)

    v = values
    check(v["command"] in COMMANDS, f"command must be one of {COMMANDS} (got {v['command']!r})")
    check(v["N"] in (1, 2, 3), f"N must be 1, 2 or 3 (got {v['N']})")
    check(0.0 < v["s"] < 1.0, f"s must lie in (0, 1) (got {v['s']})")
    check(v["R"] > 0, f"R must be > 0 (got {v['R']})")
    check(v["n"] is None or (v["n"] >= 8 and v["n"] % 2 == 0), f"n must be even and >= 8 (got {v['n']})")
    check(v["kind"] in KERNEL_KINDS, f"kind must be one of {KERNEL_KINDS} (got {v['kind']!r})")
    check(v["route"] in ROUTES, f"route must be one of {ROUTES} (got {v['route']!r})")
    check(v["t"] > 0, f"t must be > 0 (got {v['t']})")
    check(v["tau"] is None or v["tau"] > 0, f"tau must be > 0 (got {v['tau']})")
    check(v["p"] > 1, f"p must be > 1 (got {v['p']})")
    check(v["dt"] > 0, f"dt must be > 0 (got {v['dt']})")
    check(v["T"] > 0, f"T must be > 0 (got {v['T']})")
    check(v["U_max"] > 0, f"U_max must be > 0 (got {v['U_max']})")
    check(v["scheme"] in SCHEMES, f"scheme must be one of {SCHEMES} (got {v['scheme']!r})")
    check(v["snapshot_stride"] is None or v["snapshot_stride"] >= 1,
          f"snapshot_stride must be >= 1 (got {v['snapshot_stride']})")
    check(v["datum"] in DATUM_KINDS, f"datum must be one of {DATUM_KINDS} (got {v['datum']!r})")
    check(v["amplitude"] >= 0, f"amplitude must be >= 0 (got {v['amplitude']})")
    check(v["delta0"] is None or v["delta0"] > 0, f"delta0 must be > 0 (got {v['delta0']})")
    # a schedule may diverge; a small datum needs a convergent one
    if v["delta0"] is not None and v["p"] > 1 and v["datum"] == "small" and v["command"] != "schedule":
        check(v["delta0"] <= delta_threshold(v["p"]),
              f"delta0 must lie in (0, {delta_threshold(v['p']):.6g}] for p = {v['p']} (got {v['delta0']})")
    check(v["tau0"] in (None, "auto") or v["tau0"] > 0, f"tau0 must be > 0 or 'auto' (got {v['tau0']})")
    check(v["C"] is None or v["C"] >= 1, f"C must be >= 1 (got {v['C']})")
    check(v["tau0_factor"] >= 1, f"tau0_factor must be >= 1 (got {v['tau0_factor']})")
    check(v["count"] >= MIN_SAMPLES, f"count must be >= {MIN_SAMPLES} (got {v['count']})")
    check(0 <= v["seed"] < 2**64, f"seed must fit in 64 bits (got {v['seed']})")
    check(v["bin_width"] is None or v["bin_width"] > 0, f"bin_width must be > 0 (got {v['bin_width']})")
    check(all(p > 1 for p in v["p_values"]), f"p_values must all be > 1 (got {v['p_values']})")
    check(all(a >= 0 for a in v["amplitudes"]), f"amplitudes must all be >= 0 (got {v['amplitudes']})")
    check(len(v["radii"]) >= 3 and all(r > 1 for r in v["radii"]),
          f"radii must hold at least 3 values > 1 (got {v['radii']})")
    check(v["beta"] >= 1, f"beta must be >= 1 (got {v['beta']})")
    check(v["workers"] >= 1, f"workers must be >= 1 (got {v['workers']})")
    check(v["format_version"] == artifacts.FORMAT_VERSION,
          f"format_version {v['format_version']!r} is not supported (expected {artifacts.FORMAT_VERSION!r})")

    if v["command"] in ("solve", "certificate") and v["datum"] == "small":
        check(v["delta0"] is not None, "missing required key delta0 (needed by a small datum)")
        check(v["tau0"] is not None, "missing required key tau0 (needed by a small datum; a value or 'auto')")
    if v["tau0"] == "auto" and v["p"] > 1 and 0 < v["s"] < 1 and v["N"] in (1, 2, 3):
        p_bar = critical_exponent(v["N"], v["s"])
        check(v["p"] > p_bar, f"tau0 = auto needs p > p_bar = {p_bar:.6g} (got p = {v['p']})")
    return errors


def _read_config_file(path: Path, errors: List[str]) -> Dict[str, str]:
    entries = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        errors.append(f"cannot read config file {path}: {exc}")
        return entries
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"{path}:{number}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in OPTIONS:
            errors.append(f"{path}:{number}: unknown key {key!r}")
            continue
        entries[key] = value
    return entries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_lab",
        description="Mixed local/nonlocal heat laboratory",
        exit_on_error=False,
        allow_abbrev=False,
        add_help=False,
    )
    parser.add_argument("command", nargs="?", default=argparse.SUPPRESS)
    parser.add_argument("--config", default=None)
    for key, (_, help_text) in OPTIONS.items():
        if key != "command":
            parser.add_argument(f"--{key}", default=argparse.SUPPRESS, help=help_text)
    return parser


def parse_config(argv=None, config_file: Optional[Union[str, Path]] = None, environ=None) -> RunConfig:
    """Build a RunConfig from flags, an optional config file and the environment.

    Raises ValidationError carrying every problem found, not only the first.
    ``tau0 = auto`` is resolved to ``tau0_factor * tau0_lower_bound(N, s, p, C)``,
    estimating C when it is not given.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    environ = os.environ if environ is None else environ
    errors: List[str] = []

    try:
        namespace, unknown = _build_parser().parse_known_args(argv)
    except argparse.ArgumentError as exc:
        raise ValidationError("invalid command line", [str(exc)]) from exc
    for item in unknown:
        errors.append(f"unknown flag or argument {item!r}")
    flags = {k: v for k, v in vars(namespace).items() if k != "config"}
    config_file = config_file or namespace.config

    raw: Dict[str, str] = {}
    provenance: Dict[str, str] = {}
    if environ.get(OUTPUT_ENV):
        raw["output"] = environ[OUTPUT_ENV]
        provenance["output"] = "env"
    if config_file is not None:
        for key, value in _read_config_file(Path(config_file), errors).items():
            raw[key], provenance[key] = value, "file"
    for key, value in flags.items():
        raw[key], provenance[key] = value, "flag"

    if "command" not in raw:
        errors.append(f"missing required key command (one of {', '.join(COMMANDS)})")

    defaults = {f.name: f.default for f in fields(RunConfig) if f.name not in ("command", "provenance")}
    values: Dict[str, Any] = {"command": None}
    values.update(defaults)
    for key, text in raw.items():
        parse = OPTIONS[key][0]
        try:
            values[key] = parse(text)
        except ValueError:
            errors.append(f"{key}: cannot parse {text!r}")
    for key in OPTIONS:
        provenance.setdefault(key, "default")

    if not errors:
        errors.extend(_validate(values))
    if errors:
        raise ValidationError("invalid configuration: " + "; ".join(errors), errors)

    if values["tau0"] == "auto":
        if values["C"] is None:
            values["C"] = _estimate_constant(values["N"], values["s"])
            provenance["C"] = "auto"
        bound = tau0_lower_bound(values["N"], values["s"], values["p"], values["C"])
        values["tau0"] = values["tau0_factor"] * bound
        provenance["tau0"] = "auto"
        logger.info("tau0 = %g x %.6g = %.6g", values["tau0_factor"], bound, values["tau0"])
    return RunConfig(provenance=provenance, **values)


def _estimate_constant(N: int, s: float) -> float:
    # the 1-D estimate uses a wider box so the heavy tail fits at t = 10
    grid = GridSpec(1, 20.0, 2048) if N == 1 else None
    return estimate_bound_constant(ModelParams(N, s), grid=grid).constant


# ============================================================================
# Commands
# ============================================================================


@dataclass
class CommandResult:
    artifacts: List[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    exit_code: int = EXIT_OK


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def _kernel_options(config: RunConfig) -> dict:
    return {"route": config.route} if config.kind == "mixed" else {}


def _build_kernel(config: RunConfig, t: float):
    params = None if config.kind == "gauss" else config.params()
    return kernel(config.kind, params, config.grid(), t, **_kernel_options(config))


def _initial_datum(config: RunConfig, grid: GridSpec, params: ModelParams) -> Field:
    if config.datum == "uniform":
        return Field.constant(grid, config.amplitude)
    return small_initial_datum(grid, params, config.delta0, config.tau0)


def _bound_constant(config: RunConfig) -> float:
    if config.C is not None:
        return config.C
    print("    • estimation de la constante C ...")
    return _estimate_constant(config.N, config.s)


def cmd_kernel(config: RunConfig, out: Path) -> CommandResult:
    k = _build_kernel(config, config.t)
    result = CommandResult(artifacts=artifacts.write_kernel(out / f"kernel_{config.kind}.csv", k))
    result.summary = dict(k.metadata(), peak=k.peak)
    print(f"    • pic = {k.peak:.6e}, défaut de masse = {k.mass_defect:.3e}")
    if config.kind != "gauss":
        report = aliasing_estimate(config.params(), k.grid, config.t, kind=config.kind)
        result.summary["aliasing_tail_mass"] = report.tail_mass
        result.summary["aliasing_within_budget"] = report.within_budget
    if config.kind == "fractional" and config.N == 1 and config.s == 0.5:
        comparison = compare_with_poisson(k.grid, config.t)
        result.summary["poisson"] = comparison.__dict__
        print(f"    • écart au noyau de Poisson périodisé = {comparison.periodic_defect:.3e}")
    return result


def cmd_verify(config: RunConfig, out: Path) -> CommandResult:
    k = _build_kernel(config, config.t)
    k2 = _build_kernel(config, config.tau) if config.tau is not None else None
    report = verify_kernel_properties(k, k2)
    for name in ("positivity", "evenness", "mass", "semigroup"):
        value = getattr(report, f"{name}_defect")
        if value is not None:
            ok = not any(f.startswith(name) for f in report.failures())
            print(f"    {_mark(ok)} {name:12s}: {value:.3e}")
    path = artifacts.write_json(out / "verify.json", report.as_dict())
    result = CommandResult(artifacts=[path], summary=report.as_dict(), failures=report.failures())
    return result


def cmd_oracle(config: RunConfig, out: Path) -> CommandResult:
    grid = config.grid()
    density = sample_mixed_process(
        config.s, config.t, config.count, config.seed, grid=grid, bin_width=config.bin_width,
        workers=config.workers, wrap=True,
    )
    k = kernel("mixed", config.params(), grid, config.t, route="symbol")
    comparison = compare_density(density, k)
    written = artifacts.write_histogram(out / "histogram.csv", density)
    written += artifacts.write_kernel(out / "kernel_mixed.csv", k)
    ok = comparison.ks_distance <= KS_TOLERANCE
    print(f"    {_mark(ok)} distance KS = {comparison.ks_distance:.3e} (tolérance {KS_TOLERANCE})")
    print(f"    • seuil KS 95% = {comparison.ks_critical_95:.3e}, max |z| = {comparison.max_abs_z:.2f}")
    summary = dict(comparison.as_dict(), passes_ks=comparison.passes_ks, ks_tolerance=KS_TOLERANCE)
    failures = [] if ok else [f"KS distance {comparison.ks_distance:.3e} > {KS_TOLERANCE}"]
    return CommandResult(artifacts=written, summary=summary, failures=failures)


def cmd_solve(config: RunConfig, out: Path) -> CommandResult:
    grid, params = config.grid(), config.params()
    traj = run(_initial_datum(config, grid, params), config.solver_config(), params)
    snapshot_dir = out / "snapshots" if config.snapshot_stride is not None else None
    written = artifacts.write_trajectory(out / "trajectory.csv", traj, snapshot_dir)
    print(f"    • issue: {traj.describe_outcome()}, sup max = {traj.max_sup_norm:.6e}")
    result = CommandResult(artifacts=written, summary=artifacts.trajectory_outcome(traj))
    if traj.outcome == FAILURE:
        result.exit_code = NumericalFailure.exit_code
    return result


def cmd_schedule(config: RunConfig, out: Path) -> CommandResult:
    delta0 = config.delta0 if config.delta0 is not None else 0.5 * delta_threshold(config.p)
    schedule = delta_schedule(delta0, config.p)
    rows = ({"n": n, "delta_n": d} for n, d in enumerate(schedule.deltas))
    written = [artifacts.write_csv(out / "schedule.csv", ("n", "delta_n"), rows)]
    summary = {
        "delta0": schedule.delta0,
        "p": schedule.p,
        "threshold": schedule.threshold,
        "limit": schedule.limit,
        "converged": schedule.converged,
    }
    if config.C is not None and config.p > critical_exponent(config.N, config.s):
        summary["tau0_lower_bound"] = tau0_lower_bound(config.N, config.s, config.p, config.C)
    written.append(artifacts.write_json(out / "schedule.json", summary))
    print(f"    {_mark(schedule.converged)} delta0 = {delta0:.6g}, seuil = {schedule.threshold:.6g}, M = {schedule.limit}")
    return CommandResult(artifacts=written, summary=summary)


def cmd_sweep(config: RunConfig, out: Path) -> CommandResult:
    cells = [
        SweepCell(config.N, config.s, p, config.datum, a) for p in config.p_values for a in config.amplitudes
    ]
    constant = _bound_constant(config) if config.datum == "small" else None
    records = dichotomy_sweep(
        cells,
        config.solver_config(snapshot_stride=None),
        grid=config.grid(),
        constant=constant,
        tau0_factor=config.tau0_factor,
        workers=config.workers,
    )
    for r in records:
        print(f"    • p={r.p:<5g} amplitude={r.amplitude:<6g} -> {r.outcome} t*={r.t_star}")
    monotone = blowup_monotonicity(records)
    summary = {"cells": len(records), "monotone": monotone.ok, "violations": monotone.violations, "C": constant}
    failures = [f"t* not monotone in amplitude: {v}" for v in monotone.violations]
    return CommandResult(artifacts=artifacts.write_sweep(out / "sweep.csv", records), summary=summary, failures=failures)


def cmd_certificate(config: RunConfig, out: Path) -> CommandResult:
    grid, params = config.grid(), config.params()
    steps = max(1, int(round(config.T / config.dt)))
    stride = config.snapshot_stride or max(1, steps // CERTIFICATE_SNAPSHOTS)
    traj = run(_initial_datum(config, grid, params), config.solver_config(snapshot_stride=stride), params)
    if traj.outcome == FAILURE:
        raise NumericalFailure(f"certificate: solver failed at t={traj.event_time:g}")
    family = TestFunctionFamily(exponent=config.p, beta=config.beta)
    report = nonexistence_certificate(traj, family, params, config.p, radii=config.radii)
    print(f"    {_mark(report.sign_matches)} pente ajustée = {report.fitted_exponent:.4f} "
          f"(attendue: signe de {report.expected_exponent:.4f})")
    print(f"    • borne dépassée (u ne peut être globale): {'oui' if report.bound_exceeded else 'non'}")
    written = artifacts.write_certificate(out / "certificate.csv", report)
    summary = dict(report.as_dict(), outcome=traj.describe_outcome())
    failures = [] if report.sign_matches else ["fitted exponent sign does not match the expected exponent"]
    return CommandResult(artifacts=written, summary=summary, failures=failures)


HANDLERS = {
    "kernel": cmd_kernel,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "solve": cmd_solve,
    "schedule": cmd_schedule,
    "sweep": cmd_sweep,
    "certificate": cmd_certificate,
}


def execute(config: RunConfig) -> int:
    """Run ``config.command``, write its artifacts and the manifest, return the exit code."""
    out = Path(config.output) / config.command
    out.mkdir(parents=True, exist_ok=True)
    print("=" * 70)
    print(f"COMMANDE: {config.command.upper()}  (N={config.N}, s={config.s}, p={config.p})")
    print("=" * 70)
    start = time.perf_counter()
    try:
        result = HANDLERS[config.command](config, out)
        if result.failures:
            for failure in result.failures:
                print(f"    ✗ {failure}")
            result.exit_code = max(result.exit_code, EXIT_PROPERTY)
    except LabError as exc:
        logger.error("%s", exc)
        print(f"✗ {exc}")
        result = CommandResult(summary={"error": str(exc), "errors": exc.errors}, exit_code=exc.exit_code)
    wall_time = time.perf_counter() - start

    manifest = artifacts.write_manifest(
        out, config.as_dict(), config.provenance, result.artifacts, wall_time, result.exit_code, result.summary
    )
    status = "✓ Terminé" if result.exit_code == EXIT_OK else f"✗ Code de sortie {result.exit_code}"
    print(f"\n{status} en {wall_time:.1f} s, manifeste: {manifest}")
    return result.exit_code


def main(argv=None) -> int:
    setup_logging(logging.INFO)
    argv = list(sys.argv[1:] if argv is None else argv)
    if "-h" in argv or "--help" in argv:
        _build_parser().print_help()
        return EXIT_OK
    try:
        config = parse_config(argv)
    except ValidationError as exc:
        print("✗ Configuration invalide:")
        for message in exc.errors or [str(exc)]:
            print(f"    • {message}")
        return exc.exit_code
    return execute(config)
