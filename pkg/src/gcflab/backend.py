"""Kernel backend selection.

The compiled extension (gcflab._kernels, Cython) is preferred when importable;
otherwise the numpy fallback (gcflab._kernels_py) is used.  Override with the
environment variable GCFLAB_BACKEND=python|compiled or use()/force at runtime
(the benchmark and the cross-check tests do this).
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available():
    return sorted(_BACKENDS)


_env = os.environ.get("GCFLAB_BACKEND", "")
if _env and _env not in _BACKENDS:
    raise ImportError(
        f"GCFLAB_BACKEND={_env!r} not available; choices: {available()}"
    )
_active = _BACKENDS[_env] if _env else _BACKENDS.get("compiled", _kernels_py)


def active():
    """The module providing the stepping kernels."""
    return _active


def name() -> str:
    return _active.BACKEND_NAME


def use(backend: str):
    """Switch backends; returns the previously active name."""
    global _active
    if backend not in _BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choices: {available()}")
    prev = _active.BACKEND_NAME
    _active = _BACKENDS[backend]
    return prev
