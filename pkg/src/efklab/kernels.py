"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it was built; otherwise, or when
``EFKLAB_PURE_PYTHON=1`` is set, the NumPy fallback in ``_kernels_py`` is used.
Both expose ``etd_sweep`` and ``hermite_eval`` with identical semantics.
"""

import os

from . import _kernels_py

BACKEND = "python"
etd_sweep = _kernels_py.etd_sweep
hermite_eval = _kernels_py.hermite_eval

if os.environ.get("EFKLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        etd_sweep = _ckernels.etd_sweep
        hermite_eval = _ckernels.hermite_eval

__all__ = ["BACKEND", "etd_sweep", "hermite_eval"]
