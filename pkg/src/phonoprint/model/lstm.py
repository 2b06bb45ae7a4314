"""Bidirectional LSTM inference.

Gate order is (input, forget, cell, output).  The input projection for
all timesteps runs as one matmul; the sequential recurrence goes through
the kernel backend (compiled extension or numpy fallback).
"""

from __future__ import annotations

import numpy as np

from .. import backend
from ..errors import ShapeMismatchError


def lstm_direction(x, w_ih, w_hh, bias, reverse: bool = False) -> np.ndarray:
    """One direction over (T, D) input.

    w_ih: (4H, D); w_hh: (4H, H); bias: (4H,).  Returns (T, H).
    """
    if x.ndim != 2 or x.shape[1] != w_ih.shape[1]:
        raise ShapeMismatchError(
            f"LSTM input width {x.shape} does not match weights {w_ih.shape}"
        )
    if w_hh.shape[0] != w_ih.shape[0] or w_ih.shape[0] != 4 * w_hh.shape[1]:
        raise ShapeMismatchError("LSTM gate weights must be (4H, D) and (4H, H)")
    pre = x @ w_ih.T + bias
    if reverse:
        pre = pre[::-1]
    hs = backend.lstm_sequence(
        np.ascontiguousarray(pre, dtype=np.float32),
        np.ascontiguousarray(w_hh, dtype=np.float32),
    )
    return hs[::-1] if reverse else hs


def bilstm_forward(x, params: dict, prefix: str) -> np.ndarray:
    """Forward and backward passes concatenated per step: (T, 2H)."""
    fw = lstm_direction(
        x, params[f"{prefix}.fw.w_ih"], params[f"{prefix}.fw.w_hh"],
        params[f"{prefix}.fw.bias"],
    )
    bw = lstm_direction(
        x, params[f"{prefix}.bw.w_ih"], params[f"{prefix}.bw.w_hh"],
        params[f"{prefix}.bw.bias"], reverse=True,
    )
    return np.concatenate([fw, bw], axis=1)
