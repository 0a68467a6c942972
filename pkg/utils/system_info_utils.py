from __future__ import annotations
import os
import platform
from typing import Any, Dict
import numpy as np
import scipy


def get_system_info() -> Dict[str, Any]:
    """
    Interpreter and numerical-stack versions. No clock or host values, so
    artifacts embedding this stay reproducible.
    """
    return {"platform": platform.platform(aliased=True, terse=True),
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "cpu_cores": os.cpu_count()}
