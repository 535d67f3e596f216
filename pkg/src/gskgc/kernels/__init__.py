"""Traversal kernel backend selection.

The compiled Cython module is preferred when it imported cleanly; the
pure-Python module is the fallback. Both expose the same three functions with
identical outputs. Set GSKGC_KERNELS=fallback (or native) to force a backend,
e.g. for the benchmark in benchmarks/bench_kernels.py.
"""

import logging
import os

logger = logging.getLogger(__name__)

_forced = os.environ.get("GSKGC_KERNELS", "auto").lower()

if _forced not in ("auto", "native", "fallback"):
    raise ValueError(f"GSKGC_KERNELS must be auto, native or fallback, got {_forced!r}")

if _forced == "fallback":
    from gskgc.kernels import _pytraversal as _impl

    BACKEND = "fallback"
else:
    try:
        from gskgc.kernels import _cytraversal as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        if _forced == "native":
            raise
        from gskgc.kernels import _pytraversal as _impl  # type: ignore[no-redef]

        BACKEND = "fallback"
        logger.info("compiled traversal kernels unavailable; using pure-Python fallback")

bfs_distance = _impl.bfs_distance
bfs_distances = _impl.bfs_distances
enum_paths = _impl.enum_paths

__all__ = ["BACKEND", "bfs_distance", "bfs_distances", "enum_paths"]
