"""Select the compiled integrator when available, else the pure-Python one.

Set ``TWO_BOOST_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernel_py
from ._kernel_py import integrate_field

if os.environ.get("TWO_BOOST_PURE_PYTHON", "") not in ("", "0"):
    kernel_integrate = _kernel_py.integrate
    BACKEND = "python"
else:
    try:
        from ._kernel import integrate as kernel_integrate
        BACKEND = "compiled"
    except ImportError:  # extension not built
        kernel_integrate = _kernel_py.integrate
        BACKEND = "python"

__all__ = ["BACKEND", "kernel_integrate", "integrate_field"]
