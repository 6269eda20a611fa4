"""
Script de synthèse des résultats

Lit le manifeste et les CSV d'un dossier de résultats produit par
run_lab.py et écrit un résumé texte (summary.txt) à côté.

Utilisation:
    python scripts/summarize_results.py [dossier]   (défaut: output/)
"""

import os
import sys
from pathlib import Path
from typing import List

# Add the project root to sys.path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from components.artifacts import MANIFEST_NAME, read_csv, read_json, sha256_file

SUMMARY_NAME = "summary.txt"


def _format(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def check_artifacts(run_dir: Path, manifest: dict) -> List[str]:
    """Checksums of the manifest against the files on disk; returns the mismatches."""
    problems = []
    for name, expected in sorted(manifest.get("artifacts", {}).items()):
        path = run_dir / name
        if not path.exists():
            problems.append(f"{name}: fichier manquant")
        elif sha256_file(path) != expected:
            problems.append(f"{name}: somme de contrôle différente")
    return problems


def _table_lines(path: Path, max_rows: int = 20) -> List[str]:
    rows = read_csv(path)
    lines = [f"  {path.name}: {len(rows)} lignes"]
    if not rows:
        return lines
    columns = list(rows[0].keys())
    if len(columns) > 12:
        return lines
    lines.append("  " + " | ".join(f"{c:>12s}" for c in columns))
    lines.append("  " + "-" * (15 * len(columns)))
    for row in rows[:max_rows]:
        lines.append("  " + " | ".join(f"{row[c][:12]:>12s}" for c in columns))
    if len(rows) > max_rows:
        lines.append(f"  ... ({len(rows) - max_rows} lignes de plus)")
    return lines


def summarize_run(run_dir: Path) -> Path:
    """Write summary.txt for one command directory holding a manifest."""
    manifest = read_json(run_dir / MANIFEST_NAME)
    config = manifest["config"]
    lines = ["=" * 70, f"RÉSULTATS - COMMANDE: {config['command']}", "=" * 70, ""]
    lines.append(f"Code de sortie : {manifest['exit_code']}")
    lines.append(f"Durée          : {manifest['wall_time_s']:.2f} s")
    lines.append("Versions       : " + ", ".join(f"{k} {v}" for k, v in sorted(manifest["versions"].items())))
    lines.append("")

    lines.append("CONFIGURATION (valeurs hors défaut):")
    lines.append("-" * 70)
    for key, source in sorted(manifest["provenance"].items()):
        if source != "default":
            lines.append(f"  {key:15s}: {_format(config.get(key)):>20s}  [{source}]")
    lines.append("")

    lines.append("SYNTHÈSE:")
    lines.append("-" * 70)
    for key, value in sorted(manifest.get("summary", {}).items()):
        if isinstance(value, (dict, list)):
            continue
        lines.append(f"  {key:25s}: {_format(value)}")
    lines.append("")

    problems = check_artifacts(run_dir, manifest)
    lines.append("ARTEFACTS:")
    lines.append("-" * 70)
    for name in sorted(manifest.get("artifacts", {})):
        if name.endswith(".csv") and "snapshots/" not in name:
            lines.extend(_table_lines(run_dir / name))
    lines.append("")
    lines.append("✓ Sommes de contrôle vérifiées" if not problems else "✗ " + "; ".join(problems))

    out = run_dir / SUMMARY_NAME
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    root = Path(argv[0]) if argv else Path(project_root) / "output"

    print("=" * 70)
    print("SYNTHÈSE DES RÉSULTATS")
    print("=" * 70)

    manifests = sorted(root.glob(f"**/{MANIFEST_NAME}"))
    if not manifests:
        print(f"✗ Aucun manifeste trouvé dans: {root}")
        return 1

    print(f"\n[1] Manifestes trouvés: {len(manifests)}")
    for manifest in manifests:
        summary = summarize_run(manifest.parent)
        print(f"    ✓ {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
