"""Pick the GRU recurrence backend at import time.

The compiled Cython module is used when it was built; otherwise, or when
``LIDE_BACKEND=python`` is set, the numpy implementation is used. Both give
the same results up to floating-point rounding.
"""
import os

from lide.rnn import _gru_py

BACKENDS = {"python": _gru_py}

try:
    from lide.rnn import _gru_core
except ImportError:  # extension not built
    _gru_core = None
else:
    BACKENDS["cython"] = _gru_core

_requested = os.environ.get("LIDE_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "cython"):
    raise ImportError(f"LIDE_BACKEND must be 'python' or 'cython', got {_requested!r}")
if _requested == "cython" and _gru_core is None:
    raise ImportError("LIDE_BACKEND=cython but lide.rnn._gru_core is not built")

BACKEND = _requested or ("cython" if _gru_core is not None else "python")
_impl = BACKENDS[BACKEND]

recurrence_forward = _impl.recurrence_forward
recurrence_backward = _impl.recurrence_backward


def get(name: str):
    """Module implementing backend ``name`` (for benchmarks and cross-checks)."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} is not available; have {sorted(BACKENDS)}") from None
