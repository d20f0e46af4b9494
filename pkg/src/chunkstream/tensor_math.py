"""Dense numeric kernels with a fixed accumulation order.

Every reduction here adds terms strictly left to right, one rounding per
addition. The value of an output element therefore depends only on the
operands that feed it, never on the shape of the surrounding batch. Streaming
and offline code paths rely on this to agree bit for bit when they slice the
same computation differently.

Tensors are plain ``numpy.ndarray`` objects (float64 by default).
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import ConfigError, DimensionError

def sequential_sum(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along ``axis`` left to right.

    ``np.sum`` uses pairwise summation whose grouping depends on the reduction
    length and memory layout. A running accumulate has exactly one order.
    """
    x = np.asarray(x)
    if x.shape[axis] == 0:
        return np.zeros(np.delete(x.shape, axis % x.ndim), dtype=x.dtype)
    return np.take(np.add.accumulate(x, axis=axis), -1, axis=axis)


@numba.njit(cache=True)
def _matmul_kernel(a, b, out):
    nb, m, k = a.shape
    n = b.shape[2]
    for bi in range(nb):
        for i in range(m):
            for j in range(n):
                out[bi, i, j] = 0.0
            # p outermost per row: each out[i, j] accumulates in index order
            for p in range(k):
                x = a[bi, i, p]
                for j in range(n):
                    out[bi, i, j] += x * b[bi, p, j]
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over the last two axes, leading axes broadcast.

    Each output element is ``((0 + a0*b0) + a1*b1) + ...``, identical to a
    scalar triple loop. The kernel is compiled without fast-math, so there is
    no reassociation and no fused multiply-add.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.shape} x {b.shape}"
        )
    try:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError as exc:
        raise DimensionError(f"matmul batch axes incompatible: {a.shape} x {b.shape}") from exc

    m, k = a.shape[-2:]
    n = b.shape[-1]
    dtype = np.result_type(a, b, np.float32)
    nb = int(np.prod(batch, dtype=np.int64))
    a3 = np.ascontiguousarray(np.broadcast_to(a, batch + (m, k)), dtype=dtype).reshape(nb, m, k)
    b3 = np.ascontiguousarray(np.broadcast_to(b, batch + (k, n)), dtype=dtype).reshape(nb, k, n)
    out = np.empty((nb, m, n), dtype=dtype)
    _matmul_kernel(a3, b3, out)
    return out.reshape(batch + (m, n))


def softmax_masked(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over the last axis restricted to positions where ``mask`` is true.

    Masked positions get exactly zero. A row with no admissible position
    returns all zeros (only padded queries produce such rows).
    """
    scores = np.asarray(scores)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), scores.shape)
    neg = np.where(mask, scores, -np.inf)
    row_max = np.max(neg, axis=-1, keepdims=True)
    empty = ~np.any(mask, axis=-1, keepdims=True)
    row_max = np.where(empty, 0.0, row_max)
    e = np.where(mask, np.exp(np.where(mask, scores - row_max, 0.0)), 0.0)
    denom = sequential_sum(e, axis=-1)[..., None]
    denom = np.where(empty, 1.0, denom)
    return (e / denom).astype(scores.dtype, copy=False)


def layer_norm(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-5
) -> np.ndarray:
    """Normalize over the last axis, then scale and shift."""
    x = np.asarray(x)
    d = x.shape[-1]
    if d < 1:
        raise DimensionError("layer_norm needs a non-empty last axis")
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")
    mean = sequential_sum(x, axis=-1)[..., None] / d
    centered = x - mean
    var = sequential_sum(centered * centered, axis=-1)[..., None] / d
    return centered / np.sqrt(var + eps) * gain + bias


def sigmoid(x: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument never overflows
    x = np.asarray(x)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)


def swish(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return x * sigmoid(x)


def glu(x: np.ndarray) -> np.ndarray:
    """Gated linear unit: first half of the last axis gated by the second."""
    x = np.asarray(x)
    if x.shape[-1] % 2:
        raise DimensionError(f"glu needs an even last axis, got {x.shape}")
    half = x.shape[-1] // 2
    return x[..., :half] * sigmoid(x[..., half:])


def _shift_rows(x: np.ndarray, offset: int) -> np.ndarray:
    """Row t of the result is row t+offset of x, zero where out of range."""
    out = np.zeros_like(x)
    n = x.shape[0]
    if offset >= 0:
        if offset < n:
            out[: n - offset] = x[offset:]
    elif -offset < n:
        out[-offset:] = x[: n + offset]
    return out


def depthwise_conv_masked(
    x: np.ndarray,
    kernel: np.ndarray,
    tap_mask: np.ndarray | None = None,
    chunk_size: int | None = None,
) -> np.ndarray:
    """Per-channel 1-D convolution with centred taps and optional tap masking.

    Tap ``j`` reads offset ``j - (K-1)//2``. Reads outside the sequence are
    zero. With ``chunk_size`` set, reads outside the query's own chunk are
    zero too (zero padding applied per chunk). Taps are accumulated in index
    order.
    """
    x = np.asarray(x)
    kernel = np.asarray(kernel)
    if x.ndim != 2 or kernel.ndim != 2:
        raise DimensionError(f"expected x [L, d] and kernel [K, d], got {x.shape}, {kernel.shape}")
    K, d = kernel.shape
    if K % 2 == 0:
        raise ConfigError(f"kernel size must be odd, got {K}")
    if x.shape[1] != d:
        raise DimensionError(f"channel mismatch: x {x.shape} vs kernel {kernel.shape}")
    if tap_mask is None:
        tap_mask = np.ones(K, dtype=bool)
    tap_mask = np.asarray(tap_mask, dtype=bool)
    if tap_mask.shape != (K,):
        raise DimensionError(f"tap_mask must have shape ({K},), got {tap_mask.shape}")
    if chunk_size is not None and chunk_size < 1:
        raise ConfigError(f"chunk_size must be positive, got {chunk_size}")

    L = x.shape[0]
    half = (K - 1) // 2
    t = np.arange(L)
    out = np.zeros(np.broadcast_shapes(x.shape, kernel[0:1].shape), dtype=np.result_type(x, kernel))
    for j in range(K):
        if not tap_mask[j]:
            continue
        offset = j - half
        src = _shift_rows(x, offset)
        if chunk_size is not None:
            same = (t + offset) // chunk_size == t // chunk_size
            src = np.where(same[:, None], src, 0.0)
        out += kernel[j] * src
    return out
