"""Kernel backend selection.

The compiled extension (``phonoprint._native``) accelerates the LSTM
recurrence and the prefix beam search; the pure numpy implementations in
``_kernels_py`` are the fallback and the semantic reference.  Selection
happens at import time and can be forced with PHONOPRINT_BACKEND=python
or PHONOPRINT_BACKEND=native (the latter raises if the extension is
missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("PHONOPRINT_BACKEND", "auto").lower()

_native = None
if _FORCED in ("auto", "native"):
    try:
        from . import _native  # type: ignore[attr-defined]
    except ImportError:
        _native = None
        if _FORCED == "native":
            raise ImportError(
                "PHONOPRINT_BACKEND=native but the compiled extension is not built"
            )

_ACTIVE = "native" if _native is not None else "python"


def active_backend() -> str:
    return _ACTIVE


def set_backend(name: str) -> str:
    """Switch kernels at runtime (used by tests and benchmarks)."""
    global _ACTIVE
    if name == "native":
        if _native is None:
            raise ImportError("compiled extension not available")
        _ACTIVE = "native"
    elif name == "python":
        _ACTIVE = "python"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _ACTIVE


def have_native() -> bool:
    return _native is not None


def lstm_sequence(pre_gates, w_hh):
    if _ACTIVE == "native":
        return _native.lstm_sequence(pre_gates, w_hh)
    return _kernels_py.lstm_sequence(pre_gates, w_hh)


def beam_search(logp, blank, width, merge=True):
    # The raw-path variant is a diagnostic switch; only the default merged
    # search is compiled.
    if _ACTIVE == "native" and merge:
        return _native.beam_search_merged(logp, blank, width)
    return _kernels_py.beam_search(logp, blank, width, merge)
