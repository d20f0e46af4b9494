"""Chunked causal convolution and the Conformer convolution sub-block hosting it.

One depthwise kernel feeds two branches:

* causal: taps to the right of centre are masked, left taps read across chunk
  boundaries (zero padding only at the sequence start);
* chunked: every tap is live, but each chunk is zero padded at both edges, so
  a token sees future tokens only inside its own chunk.

The output blends them as ``lam * chunked + (1 - lam) * causal``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chunk_layout import ChunkLayout
from .errors import ConfigError, DimensionError
from .tensor_math import depthwise_conv_masked, glu, layer_norm, matmul, swish


@dataclass(frozen=True)
class C2ConvParams:
    kernel: np.ndarray  # [K, C] depthwise taps, shared by both branches
    pw_in: np.ndarray  # [C, 2C] pointwise expansion feeding the GLU
    pw_out: np.ndarray  # [C, C]
    norm_gain: np.ndarray
    norm_bias: np.ndarray
    chunk_size: int
    lam: float = 0.7
    right_mask: int | None = None  # defaults to (K-1)//2
    eps: float = 1e-5

    def __post_init__(self):
        K = self.kernel.shape[0]
        if K % 2 == 0:
            raise ConfigError(f"kernel size must be odd, got {K}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0 <= self.masked_right <= (K - 1) // 2:
            raise ConfigError(f"right_mask must be in [0, {(K - 1) // 2}], got {self.right_mask}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk size must be positive, got {self.chunk_size}")

    @property
    def kernel_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def masked_right(self) -> int:
        return (self.kernel_size - 1) // 2 if self.right_mask is None else self.right_mask


def causal_tap_mask(K: int, R: int) -> np.ndarray:
    """Live taps of the causal branch: offsets +1..+R switched off."""
    half = (K - 1) // 2
    offsets = np.arange(K) - half
    return ~((offsets >= 1) & (offsets <= R))


def c2_branches(
    x: np.ndarray, params: C2ConvParams, layout: ChunkLayout
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(chunked, causal)`` depthwise outputs."""
    if layout.chunk_size != params.chunk_size:
        raise ConfigError(
            f"layout chunk size {layout.chunk_size} != conv chunk size {params.chunk_size}"
        )
    if x.shape[0] != layout.padded_len:
        raise DimensionError(f"expected {layout.padded_len} rows, got {x.shape[0]}")
    K = params.kernel_size
    chunked = depthwise_conv_masked(x, params.kernel, None, chunk_size=params.chunk_size)
    causal = depthwise_conv_masked(x, params.kernel, causal_tap_mask(K, params.masked_right))
    return chunked, causal


def blend(chunked: np.ndarray, causal: np.ndarray, lam: float) -> np.ndarray:
    return lam * chunked + (1.0 - lam) * causal


def c2_depthwise(x: np.ndarray, params: C2ConvParams, layout: ChunkLayout) -> np.ndarray:
    chunked, causal = c2_branches(x, params, layout)
    return blend(chunked, causal, params.lam)


def conv_pre(x: np.ndarray, params: C2ConvParams) -> np.ndarray:
    """Pointwise expansion to 2C followed by GLU."""
    return glu(matmul(x, params.pw_in))


def conv_post(y: np.ndarray, params: C2ConvParams) -> np.ndarray:
    """Norm, swish, pointwise projection back to C."""
    y = layer_norm(y, params.norm_gain, params.norm_bias, params.eps)
    return matmul(swish(y), params.pw_out)


def conv_block(
    x: np.ndarray, params: C2ConvParams, layout: ChunkLayout, valid_len: int | None = None
) -> np.ndarray:
    """Conformer convolution module with the C2Conv depthwise stage.

    Rows at or beyond ``valid_len`` are zeroed before the depthwise stage so
    padding never leaks into valid outputs.
    """
    u = conv_pre(x, params)
    if valid_len is not None and valid_len < u.shape[0]:
        u[valid_len:] = 0.0
    return conv_post(c2_depthwise(u, params, layout), params)
