"""Kernel backend selection.

The compiled module is used when it imports cleanly; otherwise (or when
``GROWTHMECH_PURE_PYTHON=1``) the numpy fallback is used. Both expose the same
functions, and ``BACKEND`` records which one is active.
"""
import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("GROWTHMECH_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        compiled = None

_impl = compiled if compiled is not None else _fallback
BACKEND = "compiled" if compiled is not None else "python"

metric_curvature = _impl.metric_curvature
navier_apply = _impl.navier_apply


def backends():
    """Available kernel modules keyed by name (for tests and benchmarks)."""
    out = {"python": _fallback}
    if compiled is not None:
        out["compiled"] = compiled
    return out
