"""Backend selection and worker fan-out.

The hot kernels exist twice: a loop version compiled with numba and a
vectorized numpy version. ``BMCGAMES_BACKEND=numpy`` forces the fallback,
which is also used automatically when numba cannot be imported.
``BMCGAMES_WORKERS`` sets the default number of worker threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

BACKEND_ENV = "BMCGAMES_BACKEND"
WORKERS_ENV = "BMCGAMES_WORKERS"

T = TypeVar("T")


def requested_backend() -> str:
    name = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {name!r}")
    return name


def active_backend() -> str:
    if requested_backend() == "numba" and HAS_NUMBA:
        return "numba"
    return "numpy"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    workers = int(raw)
    if workers < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return workers


def chunk_bounds(n_items: int, n_chunks: int) -> List[tuple]:
    """Contiguous [start, stop) ranges covering ``range(n_items)``."""
    n_chunks = max(1, min(n_chunks, n_items)) if n_items else 1
    edges = [(n_items * i) // n_chunks for i in range(n_chunks + 1)]
    return [(edges[i], edges[i + 1]) for i in range(n_chunks)]


def map_chunks(
    fn: Callable[[int, int], T], n_items: int, workers: Optional[int] = None
) -> List[T]:
    """Run ``fn(start, stop)`` over contiguous chunks, results in chunk order.

    Kernels are compiled with ``nogil=True`` so threads overlap on multi-core
    hosts. Chunk results are returned in index order so that any reduction
    done by the caller is independent of the worker count.
    """
    workers = default_workers() if workers is None else workers
    bounds = chunk_bounds(n_items, workers)
    if workers == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in bounds]
        return [f.result() for f in futures]
