"""Kernel backend selection.

The compiled extension (``eqmatch._core``) is preferred; the numpy/pure-Python
module ``eqmatch._pycore`` is the fallback.  ``EQM_BACKEND=python`` forces the
fallback.  Callers always go through :func:`kernels` so tests and benchmarks
can switch backends at runtime with :func:`use_backend`.
"""

import contextlib
import os

from . import _pycore

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _pycore}
if _core is not None:
    _BACKENDS["compiled"] = _core

_active = "compiled" if _core is not None and os.environ.get("EQM_BACKEND", "").lower() != "python" else "python"


def available():
    return sorted(_BACKENDS)


def name():
    return _active


def kernels():
    return _BACKENDS[_active]


def set_backend(backend):
    global _active
    if backend not in _BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; have {available()}")
    _active = backend


@contextlib.contextmanager
def use_backend(backend):
    previous = _active
    set_backend(backend)
    try:
        yield kernels()
    finally:
        set_backend(previous)
