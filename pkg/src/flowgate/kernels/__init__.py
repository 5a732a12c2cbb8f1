"""Hot numeric kernels with selectable backends.

The numba backend is used when importable; set FLOWGATE_KERNELS=numpy to
force the pure-numpy fallback (or =numba to fail loudly if numba is absent).
Both backends implement the same contracts; block matching is bit-identical
across them, HSV differencing agrees to float rounding.
"""

import os

from . import _numpy

_BACKENDS = {"numpy": _numpy}
try:
    from . import _numba
    _BACKENDS["numba"] = _numba
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    _numba = None


def _pick() -> str:
    name = os.environ.get("FLOWGATE_KERNELS", "").strip().lower()
    if not name:
        return "numba" if "numba" in _BACKENDS else "numpy"
    if name not in _BACKENDS:
        raise ValueError(
            f"FLOWGATE_KERNELS={name!r} not available; choose from {sorted(_BACKENDS)}"
        )
    return name


_active = _pick()
_backend = _BACKENDS[_active]

rgb_to_hsv = _numpy.rgb_to_hsv  # single-frame conversion is not a hot path
hsv_diff_pairs = _backend.hsv_diff_pairs
block_match = _backend.block_match

from ._common import displacement_ring  # noqa: E402  (re-export)


def backend_name() -> str:
    return _active
