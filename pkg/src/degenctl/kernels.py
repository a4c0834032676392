"""Backend selection for the time-stepping kernels.

The compiled ``_sweeps`` extension is used when it was built; otherwise the
NumPy implementation in ``_sweeps_py`` takes over.  Setting
``DEGENCTL_PURE_PYTHON=1`` forces the fallback.
"""

import importlib
import os

from . import _sweeps_py

_FORCE_PY = os.environ.get("DEGENCTL_PURE_PYTHON", "") not in ("", "0")


def _load_compiled():
    try:
        return importlib.import_module("degenctl._sweeps")
    except ImportError:
        return None


_compiled = None if _FORCE_PY else _load_compiled()
_impl = _compiled if _compiled is not None else _sweeps_py

BACKEND = "cython" if _compiled is not None else "python"

thomas_solve = _impl.thomas_solve
forward_sweep = _impl.forward_sweep
adjoint_sweep = _impl.adjoint_sweep


def available_backends() -> dict:
    """Name -> module for every backend importable in this process."""
    out = {"python": _sweeps_py}
    mod = _compiled if _compiled is not None else _load_compiled()
    if mod is not None:
        out["cython"] = mod
    return out
