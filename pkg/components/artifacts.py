"""CSV / JSON writers for run outputs and the run manifest.

Reals are written with 17 significant digits and '.' as decimal separator,
booleans as ``true`` / ``false``, missing values as empty cells.  JSON is
written with sorted keys so that identical inputs give identical bytes.
"""

import csv
import hashlib
import json
import logging
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import scipy

from components.errors import ValidationError
from components.heat_kernels import KernelField
from components.mild_solver import Trajectory
from components.spectral_core import Field
from components.stochastic_oracle import EmpiricalDensity

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1"
MANIFEST_NAME = "manifest.json"

KERNEL_COLUMNS = ("x", "y", "z")
HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "probability")
TRAJECTORY_COLUMNS = ("t", "sup_norm", "mass", "tail_norm")
SWEEP_COLUMNS = (
    "N", "s", "p", "datum_kind", "amplitude", "delta0", "tau0",
    "outcome", "t_star", "max_supnorm", "envelope_ok",
)
CERTIFICATE_COLUMNS = ("r", "integral_up_phi", "bound_value")


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if np.isnan(value):
            return "nan"
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else format_value(value)
    return value


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """One row per mapping; keys outside ``columns`` are an error."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            extra = set(row) - set(columns)
            if extra:
                raise ValidationError(f"write_csv: unexpected columns {sorted(extra)} for {path.name}")
            writer.writerow({c: format_value(row.get(c)) for c in columns})
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        while True:
            chunk = f.read(1024 * 1024)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


# ----------------------------------------------------------------------------
# Module-specific dumps
# ----------------------------------------------------------------------------


def _grid_rows(field: Field) -> Iterable[dict]:
    grid = field.grid
    coords = [c.ravel() for c in grid.coordinates()]
    names = KERNEL_COLUMNS[: grid.dimension]
    for j, value in enumerate(field.values.ravel()):
        row = {name: coord[j] for name, coord in zip(names, coords)}
        row["value"] = value
        yield row


def write_field(path: Path, field: Field, metadata: Optional[Mapping[str, Any]] = None) -> List[Path]:
    """Field dump ``x[,y[,z]],value``, one row per grid point, plus a JSON sidecar."""
    path = Path(path)
    columns = KERNEL_COLUMNS[: field.grid.dimension] + ("value",)
    write_csv(path, columns, _grid_rows(field))
    meta = dict(field.grid.describe())
    meta.update(metadata or {})
    return [path, write_json(_sidecar(path), meta)]


def write_kernel(path: Path, k: KernelField) -> List[Path]:
    return write_field(path, k.field, k.metadata())


def write_histogram(path: Path, e: EmpiricalDensity) -> List[Path]:
    path = Path(path)
    rows = (
        {"bin_left": lo, "bin_right": hi, "probability": q}
        for lo, hi, q in zip(e.edges[:-1], e.edges[1:], e.probabilities)
    )
    write_csv(path, HISTOGRAM_COLUMNS, rows)
    return [path, write_json(_sidecar(path), e.metadata())]


def trajectory_outcome(traj: Trajectory) -> dict:
    return {
        "outcome": traj.outcome,
        "t_star": traj.t_star,
        "event_time": traj.event_time,
        "max_sup_norm": traj.max_sup_norm,
        "config": traj.config.describe(),
        "params": traj.params.describe(),
        "grid": traj.grid.describe(),
    }


def write_trajectory(path: Path, traj: Trajectory, snapshot_dir: Optional[Path] = None) -> List[Path]:
    """Norm history CSV and outcome sidecar; snapshots, if kept, go to
    ``snapshot_dir`` in the field dump format."""
    path = Path(path)
    rows = (
        {"t": t, "sup_norm": u, "mass": m, "tail_norm": w}
        for t, u, m, w in zip(traj.times, traj.sup_norms, traj.masses, traj.tail_norms)
    )
    write_csv(path, TRAJECTORY_COLUMNS, rows)
    written = [path, write_json(_sidecar(path), trajectory_outcome(traj))]
    if snapshot_dir is not None and traj.snapshots is not None:
        for i, t in enumerate(traj.snapshot_times):
            written += write_field(Path(snapshot_dir) / f"snapshot_{i:04d}.csv", traj.snapshot(i), {"t": t})
    return written


def write_sweep(path: Path, records) -> List[Path]:
    return [write_csv(path, SWEEP_COLUMNS, (r.row() for r in records))]


def write_certificate(path: Path, report) -> List[Path]:
    path = Path(path)
    write_csv(path, CERTIFICATE_COLUMNS, report.rows())
    return [path, write_json(_sidecar(path), report.as_dict())]


# ----------------------------------------------------------------------------
# Manifest
# ----------------------------------------------------------------------------


def versions() -> dict:
    return {
        "format": FORMAT_VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def write_manifest(
    output_dir: Path,
    config: Mapping[str, Any],
    provenance: Mapping[str, str],
    artifacts: Sequence[Path],
    wall_time: float,
    exit_code: int,
    summary: Optional[Mapping[str, Any]] = None,
) -> Path:
    """Everything needed to reproduce a run: config, where each key came from,
    library versions, wall time and a sha256 per artifact."""
    output_dir = Path(output_dir)
    checksums = {}
    for p in artifacts:
        p = Path(p)
        checksums[p.relative_to(output_dir).as_posix() if p.is_relative_to(output_dir) else str(p)] = sha256_file(p)
    payload = {
        "config": dict(config),
        "provenance": dict(provenance),
        "versions": versions(),
        "wall_time_s": wall_time,
        "exit_code": exit_code,
        "artifacts": checksums,
        "summary": dict(summary or {}),
    }
    path = write_json(output_dir / MANIFEST_NAME, payload)
    logger.info("manifest written: %s (%d artifacts)", path, len(checksums))
    return path
