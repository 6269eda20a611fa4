"""Logging setup for the lab.

Library modules only call ``logging.getLogger(__name__)``; the scripts call
``setup_logging`` once so messages come out with the bracketed level prefix
(``[WARNING] ...``) used throughout the console output.
"""

import logging
import sys
from typing import Union

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


def setup_logging(level: Union[int, str] = logging.INFO, stream=None) -> logging.Logger:
    """Install a single stream handler on the ``components`` logger tree."""
    root = logging.getLogger("components")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level if isinstance(level, int) else level.upper())
    root.propagate = False
    return root
