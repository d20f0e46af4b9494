"""Chunk-by-chunk streaming inference.

Two modes:

``recompute``
    Keep every received frame and rerun the offline encoder on the whole
    prefix at each push, emitting only the newest chunk. After ``t`` pushes the
    sampled-chunk layers use stride ``t`` (the number of chunks seen so far).
    Every emitted chunk equals the offline output over that prefix, bit for bit.

``cached``
    Process only the new chunk through each layer. Chunk-attention layers need
    no history; sampled-chunk layers reuse the keys and values cached when
    earlier chunks went through the layer; every convolution keeps the last
    ``R`` depthwise inputs as left context. With no sampled-chunk layers this
    equals ``recompute`` exactly. With them, cached keys/values were produced
    under earlier (shorter) strides, so outputs differ from ``recompute`` while
    staying causal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import attend, merge_heads, mhsa, split_heads
from .c2conv import blend, causal_tap_mask, conv_post
from .chunk_layout import make_layout, pad_to
from .encoder import (
    EncoderParams,
    conv_input,
    embed,
    encoder_forward,
    post_conv,
    pre_attention,
    zero_padding,
)
from .errors import ConfigError, DimensionError, StreamStateError
from .masks import chunk_mask
from .tensor_math import depthwise_conv_masked, matmul

MODES = ("recompute", "cached")


@dataclass
class LayerCache:
    conv_left: np.ndarray  # last R depthwise inputs, [R, C]
    keys: np.ndarray  # sampled-chunk layers only, [tokens_seen, C]
    values: np.ndarray


@dataclass
class StreamState:
    mode: str
    chunk_size: int
    frame_buffer: list[np.ndarray] = field(default_factory=list)
    layers: list[LayerCache] = field(default_factory=list)
    chunks_emitted: int = 0
    frames_received: int = 0
    closed: bool = False


def open_stream(params: EncoderParams, mode: str = "recompute") -> StreamState:
    cfg = params.config
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    state = StreamState(mode=mode, chunk_size=cfg.chunk_size)
    if mode == "cached":
        if cfg.conv_right_mask != (cfg.kernel_size - 1) // 2:
            raise ConfigError("cached streaming needs the causal branch to mask every right tap")
        R, C = cfg.conv_right_mask, cfg.d_model
        dtype = params.w_in.dtype
        state.layers = [
            LayerCache(np.zeros((R, C), dtype), np.zeros((0, C), dtype), np.zeros((0, C), dtype))
            for _ in params.blocks
        ]
    return state


def _check_frames(state: StreamState, params: EncoderParams, frames) -> np.ndarray:
    if state.closed:
        raise StreamStateError("stream is closed")
    frames = np.asarray(frames, dtype=params.w_in.dtype)
    if frames.ndim != 2 or frames.shape[1] != params.config.input_dim:
        raise DimensionError(
            f"frames must be [n, {params.config.input_dim}], got {frames.shape}"
        )
    return frames


def stream_push(state: StreamState, params: EncoderParams, frames) -> np.ndarray:
    """Consume exactly one chunk of ``W`` frames and return its ``[W, C]`` encoding."""
    frames = _check_frames(state, params, frames)
    if frames.shape[0] != state.chunk_size:
        raise DimensionError(
            f"push needs exactly {state.chunk_size} frames, got {frames.shape[0]}; "
            "use stream_flush for a final partial chunk"
        )
    return _advance(state, params, frames)


def stream_flush(state: StreamState, params: EncoderParams, frames=None) -> np.ndarray:
    """Encode a final partial chunk (fewer than ``W`` frames) and close the stream.

    Returns only the valid rows; an empty flush returns zero rows.
    """
    C = params.config.d_model
    if frames is None:
        frames = np.zeros((0, params.config.input_dim))
    frames = _check_frames(state, params, frames)
    n = frames.shape[0]
    if n >= state.chunk_size:
        raise DimensionError(f"flush takes fewer than {state.chunk_size} frames, got {n}")
    if n == 0:
        state.closed = True
        return np.zeros((0, C), dtype=params.w_in.dtype)
    out = _advance(state, params, frames)
    state.closed = True
    return out


def _advance(state: StreamState, params: EncoderParams, frames: np.ndarray) -> np.ndarray:
    n = frames.shape[0]
    start = state.frames_received
    if state.mode == "recompute":
        state.frame_buffer.append(frames)
        prefix = np.concatenate(state.frame_buffer, axis=0)
        out = encoder_forward(prefix, params)[start : start + n]
    else:
        out = _cached_chunk(state, params, frames)[:n]
    state.frames_received += n
    state.chunks_emitted += 1
    return out


def _cached_chunk(state: StreamState, params: EncoderParams, frames: np.ndarray) -> np.ndarray:
    cfg = params.config
    W, eps = cfg.chunk_size, cfg.eps
    c = state.chunks_emitted
    n_valid = frames.shape[0]
    valid_total = c * W + n_valid
    start = c * W

    h = zero_padding(embed(pad_to(frames, W), params, start), n_valid)
    local_mask = chunk_mask(make_layout(W, W), n_valid)
    for block, kind, cache in zip(params.blocks, cfg.block_kinds(), state.layers):
        z_hat, a_in = pre_attention(h, block, eps)
        if kind == "chunk":
            attn_out, _ = mhsa(a_in, block.attn, local_mask)
        else:
            attn_out = _cached_ssc_attention(a_in, block.attn, cache, c, W, valid_total, cfg.ssc_causal)
        z_tilde = attn_out + z_hat

        u = conv_input(z_tilde, block, eps, n_valid)
        R = cache.conv_left.shape[0]
        K = block.conv.kernel_size
        causal = depthwise_conv_masked(
            np.concatenate([cache.conv_left, u], axis=0), block.conv.kernel, causal_tap_mask(K, R)
        )[R:]
        chunked = depthwise_conv_masked(u, block.conv.kernel, None, chunk_size=W)
        if R:
            cache.conv_left = np.concatenate([cache.conv_left, u], axis=0)[-R:]
        z_bar = conv_post(blend(chunked, causal, block.conv.lam), block.conv) + z_tilde
        h = post_conv(z_bar, block, eps, n_valid)
    return h


def _cached_ssc_attention(a_in, attn, cache: LayerCache, c, W, valid_total, causal=True):
    """Sampled-chunk attention for the newest chunk against cached keys/values.

    With ``t = c + 1`` chunks seen, query at absolute position ``p`` belongs to
    sampled chunk ``p mod t`` whose members are ``p mod t + m*t`` for
    ``m = 0..W-1``; all of them lie in chunks ``<= c``.
    """
    t = c + 1
    h = attn.n_heads
    q = matmul(a_in, attn.w_q)
    cache.keys = np.concatenate([cache.keys, matmul(a_in, attn.w_k)], axis=0)
    cache.values = np.concatenate([cache.values, matmul(a_in, attn.w_v)], axis=0)

    pos = c * W + np.arange(W)
    members = (pos % t)[:, None] + t * np.arange(W)[None, :]  # [W queries, W keys]
    admissible = (members < valid_total) & (pos < valid_total)[:, None]
    if causal:
        admissible &= members // W <= c
    qh = split_heads(q[:, None, :], h)  # [W, h, 1, d]
    kh = split_heads(cache.keys[members], h)  # [W, h, W, d]
    vh = split_heads(cache.values[members], h)
    ctx = merge_heads(attend(qh, kh, vh, admissible[:, None, None, :]))[:, 0, :]
    return matmul(ctx, attn.w_o)


def run_stream(params: EncoderParams, x: np.ndarray, mode: str = "recompute") -> list[np.ndarray]:
    """Stream ``x`` through a fresh state; returns the emitted chunks in order."""
    state = open_stream(params, mode)
    W = state.chunk_size
    x = np.asarray(x)
    full = (x.shape[0] // W) * W
    chunks = [stream_push(state, params, x[i : i + W]) for i in range(0, full, W)]
    tail = stream_flush(state, params, x[full:])
    if tail.shape[0]:
        chunks.append(tail)
    return chunks
