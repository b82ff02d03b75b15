"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``WPCDELAY_PURE_PYTHON=1`` to force the fallback. Callers go through
``kernels()`` at call time so :func:`use_backend` takes effect everywhere.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _kernels_py if (_compiled is None or os.environ.get("WPCDELAY_PURE_PYTHON")) else _compiled


def kernels():
    return _active


def backend_name():
    return "cython" if _active is _compiled else "python"


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])


def use_backend(name):
    """Switch the active kernel set; returns the previous backend name."""
    global _active
    previous = backend_name()
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous
