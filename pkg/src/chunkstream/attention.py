"""Multi-head self-attention over global, chunked, sampled-chunk or time-restricted scopes.

Chunk kinds never materialize cross-chunk scores: the sequence is viewed as
``[Cn, W, C]`` (after the sampling permutation for ``ssc``) and scores are
computed per block. Every call also returns the multiply-accumulate count of
the work it actually did, softmax excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chunk_layout import apply_plan
from .errors import ConfigError, DimensionError
from .masks import KINDS, AttnMask
from .tensor_math import matmul, softmax_masked


@dataclass(frozen=True)
class MhsaParams:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    n_heads: int

    def __post_init__(self):
        C = self.w_q.shape[0]
        for w in (self.w_q, self.w_k, self.w_v, self.w_o):
            if w.shape != (C, C):
                raise DimensionError(f"projection weights must be [{C}, {C}], got {w.shape}")
        if self.n_heads < 1 or C % self.n_heads:
            raise ConfigError(f"d_model {C} is not divisible by n_heads {self.n_heads}")

    @property
    def d_model(self) -> int:
        return self.w_q.shape[0]

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


@dataclass(frozen=True)
class MacCount:
    projections: int = 0
    qk_scores: int = 0
    av_mix: int = 0
    output_proj: int = 0

    @property
    def total(self) -> int:
        return self.projections + self.qk_scores + self.av_mix + self.output_proj

    def __add__(self, other: "MacCount") -> "MacCount":
        return MacCount(
            self.projections + other.projections,
            self.qk_scores + other.qk_scores,
            self.av_mix + other.av_mix,
            self.output_proj + other.output_proj,
        )


def split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    """``[..., T, C] -> [..., h, T, C/h]``."""
    *lead, T, C = x.shape
    return np.swapaxes(x.reshape(*lead, T, n_heads, C // n_heads), -3, -2)


def merge_heads(x: np.ndarray) -> np.ndarray:
    """``[..., h, T, d] -> [..., T, h*d]``."""
    *lead, h, T, d = x.shape
    return np.swapaxes(x, -3, -2).reshape(*lead, T, h * d)


def attend(q: np.ndarray, k: np.ndarray, v: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Scaled dot-product attention on head-split blocks.

    ``q: [..., h, Tq, d]``, ``k, v: [..., h, Tk, d]``, ``mask`` broadcastable
    to ``[..., h, Tq, Tk]``.
    """
    scale = 1.0 / float(np.sqrt(q.shape[-1]))
    scores = matmul(q, np.swapaxes(k, -1, -2)) * scale
    probs = softmax_masked(scores, mask)
    return matmul(probs, v)


def _local_blocks(x, params, block_mask, Cn, W):
    """Attention inside each of ``Cn`` contiguous blocks of ``W`` rows."""
    C, h = params.d_model, params.n_heads
    q = split_heads(matmul(x, params.w_q).reshape(Cn, W, C), h)
    k = split_heads(matmul(x, params.w_k).reshape(Cn, W, C), h)
    v = split_heads(matmul(x, params.w_v).reshape(Cn, W, C), h)
    ctx = attend(q, k, v, block_mask[:, None, :, :])
    return merge_heads(ctx).reshape(Cn * W, C)


def mhsa(x: np.ndarray, params: MhsaParams, mask: AttnMask) -> tuple[np.ndarray, MacCount]:
    """Masked multi-head self-attention; returns ``(output, macs)``.

    ``x`` is ``[Lp, C]`` in original token order. Queries with no admissible
    key (padding) produce zero rows.
    """
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != params.d_model:
        raise DimensionError(f"expected x [Lp, {params.d_model}], got {x.shape}")
    Lp = x.shape[0]
    if mask.size != Lp:
        raise DimensionError(f"mask is {mask.size}x{mask.size} but sequence has {Lp} rows")
    C, h = params.d_model, params.n_heads
    W, Cn = mask.layout.chunk_size, mask.layout.num_chunks

    if mask.kind in ("chunk", "ssc"):
        blocks = mask.blocks()
        if mask.kind == "ssc":
            xs = apply_plan(x, mask.plan, "gather")
            ctx = apply_plan(_local_blocks(xs, params, blocks, Cn, W), mask.plan, "scatter")
        else:
            ctx = _local_blocks(x, params, blocks, Cn, W)
        pairs = Cn * W * W
    elif mask.kind == "global":
        q, k, v = (split_heads(matmul(x, w), h) for w in (params.w_q, params.w_k, params.w_v))
        ctx = merge_heads(attend(q, k, v, mask.admissible[None]))
        pairs = Lp * Lp
    elif mask.kind == "time_restricted":
        q, k, v = (split_heads(matmul(x, w), h) for w in (params.w_q, params.w_k, params.w_v))
        ctx = np.zeros_like(x, dtype=np.result_type(x, params.w_q))
        pairs = 0
        for c in range(Cn):
            rows = slice(c * W, (c + 1) * W)
            end = (c + 1) * W
            sub = mask.admissible[rows, :end][None]
            ctx[rows] = merge_heads(attend(q[:, rows], k[:, :end], v[:, :end], sub))
            pairs += W * end
    else:
        raise ConfigError(f"unknown mask kind {mask.kind!r}; expected one of {KINDS}")

    out = matmul(ctx, params.w_o)
    macs = MacCount(
        projections=3 * Lp * C * C,
        qk_scores=pairs * C,
        av_mix=pairs * C,
        output_proj=Lp * C * C,
    )
    return out, macs


def predict_macs(kind: str, L: int, W: int, C: int) -> MacCount:
    """Closed-form MAC count for one attention layer over ``L`` tokens.

    global: ``4LC^2 + 2L^2C``; chunk/ssc: ``4LC^2 + 2WLC``;
    time_restricted: ``4LC^2 + 2C W^2 (1 + 2 + ... + Cn)``.
    """
    if kind in ("chunk", "ssc"):
        if L % W:
            raise ConfigError(f"L={L} must be a multiple of W={W} for chunked kinds")
        pairs = W * L
    elif kind == "global":
        pairs = L * L
    elif kind == "time_restricted":
        if L % W:
            raise ConfigError(f"L={L} must be a multiple of W={W} for chunked kinds")
        Cn = L // W
        pairs = W * W * Cn * (Cn + 1) // 2
    else:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {KINDS}")
    return MacCount(3 * L * C * C, pairs * C, pairs * C, L * C * C)
