"""
Lancement d'une commande du laboratoire

Utilisation:
    python scripts/run_lab.py <commande> [--clé valeur ...] [--config fichier.cfg]

Commandes: kernel, verify, oracle, solve, schedule, sweep, certificate.
Les artefacts (CSV, JSON, manifeste) sont écrits dans <output>/<commande>/.
Voir docs/GUIDE_UTILISATION.md et docs/CONFIGURATION.md.
"""

import os
import sys

# Add the project root to sys.path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from components.cli_frontend import main

if __name__ == "__main__":
    sys.exit(main())
