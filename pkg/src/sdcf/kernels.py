"""Backend selection for the simulation kernel.

The compiled extension is used when it imported successfully; the numpy
fallback otherwise. Setting SDCF_PURE_PYTHON=1 in the environment forces
the fallback (useful for benchmarking and for debugging the extension).
Both backends implement the same `run_filter` contract and agree to
rounding level; see benchmarks/bench_kernels.py for a direct comparison.
"""

from __future__ import annotations

import os

from . import _filter_py

ATTACK_PRECOMPUTED = _filter_py.ATTACK_PRECOMPUTED
ATTACK_ESTIMATE_AWARE = _filter_py.ATTACK_ESTIMATE_AWARE

if os.environ.get("SDCF_PURE_PYTHON"):
    _impl = _filter_py
else:
    try:
        from . import _filtercore as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _filter_py

BACKEND: str = _impl.BACKEND
run_filter = _impl.run_filter


def available_backends() -> dict:
    """Map backend name -> run_filter callable for every importable backend."""
    out = {"python": _filter_py.run_filter}
    try:
        from . import _filtercore

        out["compiled"] = _filtercore.run_filter
    except ImportError:
        pass
    return out
