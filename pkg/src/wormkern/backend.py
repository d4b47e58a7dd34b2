"""Select the compiled integrand kernels when available, else the numpy fallback.

Set WORMKERN_PURE=1 to force the numpy path (used by the benchmark and tests).
"""
from __future__ import annotations

import os

from . import _fallback

_impl = _fallback
_name = "numpy"

if os.environ.get("WORMKERN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _accel as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        _name = "cython"

mode_panels = _impl.mode_panels
split_panels = _impl.split_panels
mode_values = _impl.mode_values
split_values = _impl.split_values
integrate_mode = _impl.integrate_mode
integrate_split = _impl.integrate_split


def backend() -> str:
    """Name of the active integrand backend: 'cython' or 'numpy'."""
    return _name


def implementation(name: str):
    """Module implementing the kernels for an explicit backend name."""
    if name == "numpy":
        return _fallback
    if name == "cython":
        from . import _accel  # type: ignore[attr-defined]
        return _accel
    raise ValueError(f"unknown backend {name!r}")
