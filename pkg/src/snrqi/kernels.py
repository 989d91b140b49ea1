"""Backend selection for the sweep kernel.

The compiled extension is used when it imports; otherwise the numpy
fallback. ``SNRQI_BACKEND=python`` forces the fallback and
``SNRQI_BACKEND=compiled`` makes a missing extension an import error.
"""

import os

from . import _sweep_py

try:
    from . import _sweep_ext
except ImportError:  # pragma: no cover - depends on the build
    _sweep_ext = None

_requested = os.environ.get("SNRQI_BACKEND", "").strip().lower()
if _requested not in ("", "python", "compiled"):
    raise ImportError(f"SNRQI_BACKEND must be 'python' or 'compiled', got {_requested!r}")
if _requested == "compiled" and _sweep_ext is None:
    raise ImportError("SNRQI_BACKEND=compiled but snrqi._sweep_ext is not built")

BACKENDS = {"python": _sweep_py.dd_sweep}
if _sweep_ext is not None:
    BACKENDS["compiled"] = _sweep_ext.dd_sweep

if _requested:
    BACKEND = _requested
else:
    BACKEND = "compiled" if _sweep_ext is not None else "python"

dd_sweep = BACKENDS[BACKEND]


def get_sweep(name=None):
    """Return the sweep kernel for backend ``name`` (default: the active one)."""
    if name is None:
        return dd_sweep
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
