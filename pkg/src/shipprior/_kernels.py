"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy path.
Set ``SHIPPRIOR_BACKEND=numpy`` (or ``compiled``) to force a choice.
"""

import logging
import os

from . import _sse_numpy

logger = logging.getLogger(__name__)

try:
    from . import _sse_core
except ImportError:  # extension not built
    _sse_core = None

KERNELS = {"numpy": _sse_numpy.single_scale}
if _sse_core is not None:
    KERNELS["compiled"] = _sse_core.single_scale


def _default_backend() -> str:
    requested = os.environ.get("SHIPPRIOR_BACKEND", "auto").lower()
    if requested == "auto":
        return "compiled" if "compiled" in KERNELS else "numpy"
    if requested not in KERNELS:
        logger.warning("backend %r unavailable, using numpy", requested)
        return "numpy"
    return requested


DEFAULT_BACKEND = _default_backend()


def available_backends() -> list[str]:
    return sorted(KERNELS)


def get_kernel(backend: str | None = None):
    name = backend or DEFAULT_BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}") from None
