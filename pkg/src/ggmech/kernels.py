"""Kernel backend selection.

The compiled extension is used when it was built; otherwise, or when the
``GGMECH_PURE_PYTHON`` environment variable is set to a non-empty value,
the numpy fallback is used. The two agree up to floating-point summation
order; a given backend is deterministic.
"""

import os

from . import _kernels_py

BACKEND = "python"
mc_coefficients = _kernels_py.mc_coefficients
exceed_fraction = _kernels_py.exceed_fraction

if not os.environ.get("GGMECH_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        mc_coefficients = _compiled.mc_coefficients
        exceed_fraction = _compiled.exceed_fraction
