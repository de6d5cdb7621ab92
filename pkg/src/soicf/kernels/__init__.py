"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The numba backend is used when numba imports cleanly, unless the environment
variable ``SOICF_DISABLE_NUMBA`` is set to a truthy value (``1``, ``true``,
``yes``). Both backends can be loaded explicitly with :func:`backend`.
"""
import importlib
import os

from . import _numpy

__all__ = [
    "BACKEND",
    "backend",
    "sqeuclidean",
    "js_rows",
    "nondominated_ranks",
    "crowding_distance",
    "ar_fit",
    "ar_fitted",
    "generate_batch",
]

_NAMES = __all__[2:]


def _numba_requested():
    flag = os.environ.get("SOICF_DISABLE_NUMBA", "").strip().lower()
    return flag not in {"1", "true", "yes", "on"}


def backend(name):
    """Return the kernel module for ``"numba"`` or ``"numpy"``."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        return importlib.import_module("._numba", __name__)
    raise ValueError(f"unknown kernel backend {name!r}")


_impl = _numpy
BACKEND = "numpy"
if _numba_requested():
    try:
        _impl = backend("numba")
        BACKEND = "numba"
    except ImportError:
        pass

sqeuclidean = _impl.sqeuclidean
js_rows = _impl.js_rows
nondominated_ranks = _impl.nondominated_ranks
crowding_distance = _impl.crowding_distance
ar_fit = _impl.ar_fit
ar_fitted = _impl.ar_fitted
generate_batch = _impl.generate_batch
