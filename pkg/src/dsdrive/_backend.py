"""Kernel backend selection.

The compiled extension is used when available; the pure-Python twin
otherwise.  Set ``DSDRIVE_BACKEND=python`` to force the fallback (used by
the benchmark and by CI to exercise both paths).
"""

import os

from . import _kernels_py

_forced = os.environ.get("DSDRIVE_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        if _forced == "cython":
            raise ImportError(
                "DSDRIVE_BACKEND=cython requested but the compiled extension "
                "is not built; run `pip install -e . --no-build-isolation`"
            )
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME
modulator_loop = _impl.modulator_loop
rk4_loop = _impl.rk4_loop
