"""Backend selection for the Godunov kernels.

The compiled extension is used when importable; set ``BURGERLAB_PURE=1`` to
force the numpy fallback.
"""

from __future__ import annotations

import os

if os.environ.get("BURGERLAB_PURE", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
face_fluxes = _impl.face_fluxes
godunov_update = _impl.godunov_update
advance = _impl.advance
SPEED_FLOOR: float = _impl.SPEED_FLOOR


def backends() -> dict:
    """All importable backend modules, keyed by name."""
    from . import _kernels_py

    found = {"numpy": _kernels_py}
    try:
        from . import _kernels  # type: ignore[attr-defined]

        found["cython"] = _kernels
    except ImportError:  # pragma: no cover
        pass
    return found
