"""Backend selection for the step kernels.

The compiled backend is used when numba imports cleanly, unless the
environment variable ``CHAINBREAK_DISABLE_NUMBA`` is set to a true value
(``1``, ``true``, ``yes``, ``on``).  Both backends expose the same functions
and produce the same numbers up to floating-point reassociation.
"""

import os

from . import _numpy_impl as numpy_backend

_FLAG = os.environ.get("CHAINBREAK_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")

numba_backend = None
if not NUMBA_DISABLED:
    try:
        from . import _numba_impl as numba_backend
    except ImportError:  # pragma: no cover - numba missing or broken
        numba_backend = None

DEFAULT_BACKEND = "numba" if numba_backend is not None else "numpy"


def available_backends():
    return ("numba", "numpy") if numba_backend is not None else ("numpy",)


def get_backend(name=None):
    """Return the kernel module for ``name`` (``None`` = default)."""
    name = name or DEFAULT_BACKEND
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise ValueError("numba backend unavailable (not installed or disabled)")
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
