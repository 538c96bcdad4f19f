"""Kernel backend selection.

Hot loops exist twice: a numba ``@njit`` version and a numpy/pure-Python
version. ``RHOLAB_BACKEND=numpy`` forces the fallback; the default uses numba
when it imports. ``RHOLAB_WORKERS`` sets the process-pool width for sweeps.
"""

from __future__ import annotations

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None

_requested = os.environ.get("RHOLAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"RHOLAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_state = {"numba": HAVE_NUMBA and _requested == "numba"}


def njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def use_numba() -> bool:
    return _state["numba"]


def backend_name() -> str:
    return "numba" if _state["numba"] else "numpy"


def set_backend(name: str) -> None:
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["numba"] = name == "numba"


@contextlib.contextmanager
def backend(name: str):
    prev = backend_name()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def worker_count() -> int:
    raw = os.environ.get("RHOLAB_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"RHOLAB_WORKERS must be an integer, got {raw!r}") from None


def pmap(fn, items):
    """Ordered map over ``items``; fans out to processes when RHOLAB_WORKERS > 1."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
