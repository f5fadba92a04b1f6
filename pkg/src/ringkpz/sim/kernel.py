"""Backend selection for the event loop.

The compiled extension is used when it imports; setting
``RINGKPZ_PURE_PYTHON=1`` forces the pure-Python loop.  Both backends
consume the uniform stream identically.
"""

from __future__ import annotations

import os

from . import _gillespie_py

ENV_PURE = "RINGKPZ_PURE_PYTHON"

_compiled = None
if os.environ.get(ENV_PURE, "") in ("", "0"):
    try:
        from . import _gillespie as _compiled  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def get_advance(backend: str | None = None):
    """The ``advance`` function of the requested (or active) backend."""
    backend = backend or BACKEND
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled Gillespie extension is not available")
        return _compiled.advance
    if backend == "python":
        return _gillespie_py.advance
    raise ValueError(f"unknown backend {backend!r}")
