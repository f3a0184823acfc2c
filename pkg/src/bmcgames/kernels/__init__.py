"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is fixed at import time from ``BMCGAMES_BACKEND`` (see
:mod:`bmcgames._accel`). Both implementations stay importable as
``kernels.numba_impl`` and ``kernels.numpy_impl`` so they can be compared
directly in tests and benchmarks.
"""
from .._accel import HAS_NUMBA, active_backend
from . import _numpy as numpy_impl

if HAS_NUMBA:
    from . import _numba as numba_impl
else:  # pragma: no cover
    numba_impl = None

BACKEND = active_backend()
_impl = numba_impl if BACKEND == "numba" else numpy_impl

# ternary-search iterations giving a bracket below 1e-12 on p0
CAPACITY_ITERS = 69

capacity_cells = _impl.capacity_cells
ratio_min = _impl.ratio_min
imis_cells = _impl.imis_cells
oracle_batch = _impl.oracle_batch
ensemble_pcorrect = _impl.ensemble_pcorrect
order_violation = _impl.order_violation


def get_impl(name: str):
    """Return the kernel module for ``name`` ('numba' or 'numpy')."""
    if name == "numpy":
        return numpy_impl
    if name == "numba" and numba_impl is not None:
        return numba_impl
    raise ValueError(f"backend {name!r} is not available")


__all__ = [
    "BACKEND",
    "CAPACITY_ITERS",
    "capacity_cells",
    "ratio_min",
    "imis_cells",
    "oracle_batch",
    "ensemble_pcorrect",
    "order_violation",
    "get_impl",
    "numpy_impl",
    "numba_impl",
]
