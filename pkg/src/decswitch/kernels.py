"""Kernel selection.

The compiled extension ``decswitch._core`` is used when it imports; otherwise
the pure-Python implementations in ``decswitch._fallback`` take over.  Set
``DECSWITCH_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("DECSWITCH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback

dijkstra = _impl.dijkstra
multi_dijkstra = _impl.multi_dijkstra
min_weight_perfect_matching = _impl.min_weight_perfect_matching
uf_grow = _impl.uf_grow
uf_peel = _impl.uf_peel
bp_decode = _impl.bp_decode
naive_run = _impl.naive_run
sliding_run = _impl.sliding_run
double_run = _impl.double_run

__all__ = [
    "BACKEND",
    "dijkstra",
    "multi_dijkstra",
    "min_weight_perfect_matching",
    "uf_grow",
    "uf_peel",
    "bp_decode",
    "naive_run",
    "sliding_run",
    "double_run",
]
