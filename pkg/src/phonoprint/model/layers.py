"""Forward-only layer primitives for the phone recognition network.

Tensors are (time, frequency, channels) float32.  Convolutions use
"same" padding (output spatial size = ceil(input / stride)) and are
realized as one matmul per kernel tap, which keeps the arithmetic in
BLAS without materializing an im2col buffer.
"""

from __future__ import annotations

import numpy as np

from ..errors import MissingStatsError, ShapeMismatchError


def hard_swish(x: np.ndarray) -> np.ndarray:
    """x * clamp(x + 3, 0, 6) / 6, elementwise."""
    return x * (np.clip(x + 3.0, 0.0, 6.0) / 6.0)


def bn_hard_swish_(x: np.ndarray, mean, var, gamma, beta, eps: float) -> np.ndarray:
    """Fused in-place batch norm + hard swish over the last axis.

    Mutates and returns ``x``; callers own the buffer.
    """
    scale = (gamma / np.sqrt(var + eps)).astype(x.dtype)
    shift = (beta - mean * scale).astype(x.dtype)
    x *= scale
    x += shift
    gate = np.clip(x + np.array(3.0, dtype=x.dtype), 0.0, 6.0)
    gate *= np.array(1.0 / 6.0, dtype=x.dtype)
    x *= gate
    return x


def same_pad_amount(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


# Accumulator chunk kept cache-resident; taps of large outputs would
# otherwise stream the full tensor through memory once per kernel tap.
_CONV_CHUNK_BYTES = 4 << 20


def conv2d(x: np.ndarray, kernel: np.ndarray, stride=(1, 1), bias=None) -> np.ndarray:
    """2-D convolution over (time, freq, channels) with same padding.

    kernel: (k_time, k_freq, c_in, c_out); stride: (time, freq).  The
    kernel taps accumulate into time-chunked buffers via one matmul each.
    """
    if x.ndim != 3 or kernel.ndim != 4:
        raise ShapeMismatchError("conv2d expects (T,F,C) input and 4-D kernel")
    kt, kf, cin, cout = kernel.shape
    if x.shape[2] != cin:
        raise ShapeMismatchError(f"channel mismatch: input {x.shape[2]}, kernel {cin}")
    st, sf = stride
    t_out, pt0, pt1 = same_pad_amount(x.shape[0], kt, st)
    f_out, pf0, pf1 = same_pad_amount(x.shape[1], kf, sf)
    if pt0 or pt1 or pf0 or pf1:
        xp = np.pad(x, ((pt0, pt1), (pf0, pf1), (0, 0)))
    else:
        xp = x
    out = np.empty((t_out, f_out, cout), dtype=np.float32)
    rows = max(1, _CONV_CHUNK_BYTES // (4 * f_out * cout))
    for a in range(0, t_out, rows):
        b = min(t_out, a + rows)
        acc = np.zeros(((b - a) * f_out, cout), dtype=np.float32)
        for dt in range(kt):
            for df in range(kf):
                tap = xp[a * st + dt : (b - 1) * st + dt + 1 : st,
                         df : df + (f_out - 1) * sf + 1 : sf, :]
                acc += tap.reshape(-1, cin) @ kernel[dt, df]
        if bias is not None:
            acc += bias
        out[a:b] = acc.reshape(b - a, f_out, cout)
    return out


def batchnorm_inference(x, mean, var, gamma, beta, eps: float = 1e-5):
    """Per-channel normalization with stored statistics (last axis)."""
    for name, p in (("mean", mean), ("var", var), ("gamma", gamma), ("beta", beta)):
        if p is None:
            raise MissingStatsError(f"batch norm parameter {name!r} missing")
        if np.shape(p) != (x.shape[-1],):
            raise MissingStatsError(
                f"batch norm {name} has shape {np.shape(p)}, expected ({x.shape[-1]},)"
            )
    scale = (gamma / np.sqrt(var + eps)).astype(np.float32)
    shift = (beta - mean * scale).astype(np.float32)
    return x * scale + shift


def maxpool_freq2(x: np.ndarray) -> np.ndarray:
    """Max pooling with kernel 1x2, stride 2 along frequency."""
    T, F, C = x.shape
    if F % 2:
        raise ShapeMismatchError(f"frequency dim must be even for 1x2 pooling, got {F}")
    return x.reshape(T, F // 2, 2, C).max(axis=2)


def depthwise_freq_collapse(x: np.ndarray, kernel: np.ndarray, bias=None) -> np.ndarray:
    """Depthwise conv spanning the full frequency extent (valid padding).

    x: (T, F, C); kernel: (F, C).  Collapses frequency, giving (T, C).
    """
    if x.shape[1:] != kernel.shape:
        raise ShapeMismatchError(
            f"depthwise kernel {kernel.shape} does not match input {x.shape[1:]}"
        )
    out = np.einsum("tfc,fc->tc", x, kernel)
    if bias is not None:
        out += bias
    return out.astype(np.float32)


def _separable_pair(x, p, prefix, freq_stride=1):
    """Factorized k x k convolution: time factor then frequency factor."""
    mid = conv2d(x, p[f"{prefix}_t.kernel"], (1, 1), p[f"{prefix}_t.bias"])
    return conv2d(mid, p[f"{prefix}_f.kernel"], (1, freq_stride), p[f"{prefix}_f.bias"])


def residual_inception_block(x: np.ndarray, p: dict, scale: float = 0.3) -> np.ndarray:
    """Three parallel branches (1x1, separable 3x3, separable 5x5), each
    behind a 1x1 channel reduction, concatenated, projected back to the
    input width, scaled and added to the input."""
    c = x.shape[2]
    if p["proj.kernel"].shape[3] != c:
        raise ShapeMismatchError(
            f"block projects to {p['proj.kernel'].shape[3]} channels, input has {c}"
        )
    b1 = hard_swish(conv2d(x, p["b1.kernel"], (1, 1), p["b1.bias"]))
    r3 = hard_swish(conv2d(x, p["b3_reduce.kernel"], (1, 1), p["b3_reduce.bias"]))
    b3 = hard_swish(_separable_pair(r3, p, "b3"))
    r5 = hard_swish(conv2d(x, p["b5_reduce.kernel"], (1, 1), p["b5_reduce.bias"]))
    b5 = hard_swish(_separable_pair(r5, p, "b5"))
    concat = np.concatenate([b1, b3, b5], axis=2)
    branch = conv2d(concat, p["proj.kernel"], (1, 1), p["proj.bias"])
    return x + np.float32(scale) * branch


def reduction_inception_block(x: np.ndarray, p: dict) -> np.ndarray:
    """Halve the frequency axis, keep time: max-pool branch concatenated
    with a frequency-strided separable convolution branch."""
    pool = maxpool_freq2(x)
    r = hard_swish(conv2d(x, p["reduce.kernel"], (1, 1), p["reduce.bias"]))
    conv = hard_swish(_separable_pair(r, p, "conv", freq_stride=2))
    return np.concatenate([pool, conv], axis=2)
