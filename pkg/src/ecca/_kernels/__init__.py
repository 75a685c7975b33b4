"""Kernel backend selection: compiled extension if available, NumPy otherwise.

Set ECCA_PURE_PYTHON=1 to force the NumPy fallback (used by the benchmark
and to debug backend differences).
"""

import os

from . import newton_py

KIND_GAUSSIAN = newton_py.KIND_GAUSSIAN
KIND_BINOMIAL = newton_py.KIND_BINOMIAL
STATUS_OK = newton_py.STATUS_OK
STATUS_MAXITER = newton_py.STATUS_MAXITER
STATUS_STALLED = newton_py.STATUS_STALLED
STATUS_HESSIAN = newton_py.STATUS_HESSIAN

if os.environ.get("ECCA_PURE_PYTHON"):
    BACKEND = "python"
    newton_rows = newton_py.newton_rows
else:
    try:
        from . import _newton_cy

        BACKEND = "cython"
        newton_rows = _newton_cy.newton_rows
    except ImportError:
        BACKEND = "python"
        newton_rows = newton_py.newton_rows
