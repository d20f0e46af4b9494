"""Encoder stack of interleaved chunk-attention and sampled-chunk-attention Conformer blocks.

Each block is a Macaron-style Conformer block::

    z_hat   = 0.5 * FF(LN(z)) + z
    z_tilde = MHSA(LN(z_hat)) + z_hat          # chunk or sampled-chunk scope
    z_bar   = Conv(LN(z_tilde)) + z_tilde      # chunked causal convolution
    out     = LN(0.5 * FF(LN(z_bar)) + z_bar)

The stack alternates a chunk block and a sampled-chunk block, ``block_pairs``
times. The frontend is reduced to a linear projection plus a sinusoidal
absolute position encoding.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .attention import MhsaParams, mhsa
from .c2conv import C2ConvParams, c2_depthwise, conv_post, conv_pre
from .chunk_layout import ChunkLayout, make_layout, make_sampling_plan, pad_to
from .errors import ConfigError, DimensionError
from .masks import AttnMask, chunk_mask, ssc_mask
from .tensor_math import layer_norm, matmul, swish


@dataclass(frozen=True)
class EncoderConfig:
    input_dim: int = 80
    d_model: int = 64
    n_heads: int = 4
    block_pairs: int = 6
    chunk_size: int = 16
    kernel_size: int = 15
    right_mask: int | None = None  # None -> (kernel_size - 1) // 2, i.e. 7 for K=15
    lam: float = 0.7
    ff_expansion: int = 4
    eps: float = 1e-5
    seed: int = 0
    use_ssc: bool = True  # False replaces every sampled-chunk block with a chunk block
    ssc_causal: bool = True  # test hook: False leaks future chunks inside sampled chunks
    dtype: str = "float64"

    def __post_init__(self):
        for name in ("input_dim", "d_model", "n_heads", "block_pairs", "chunk_size",
                     "kernel_size", "ff_expansion"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.n_heads:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if not 0 <= self.conv_right_mask <= (self.kernel_size - 1) // 2:
            raise ConfigError(f"right_mask out of range for kernel {self.kernel_size}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lam must lie in [0, 1], got {self.lam}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype}")

    @property
    def conv_right_mask(self) -> int:
        return (self.kernel_size - 1) // 2 if self.right_mask is None else self.right_mask

    @property
    def num_blocks(self) -> int:
        return 2 * self.block_pairs

    def block_kinds(self) -> list[str]:
        second = "ssc" if self.use_ssc else "chunk"
        return ["chunk", second] * self.block_pairs


@dataclass(frozen=True)
class LayerNormParams:
    gain: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class FeedForwardParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass(frozen=True)
class BlockParams:
    ln_ff1: LayerNormParams
    ff1: FeedForwardParams
    ln_att: LayerNormParams
    attn: MhsaParams
    ln_conv: LayerNormParams
    conv: C2ConvParams
    ln_ff2: LayerNormParams
    ff2: FeedForwardParams
    ln_out: LayerNormParams


@dataclass(frozen=True)
class EncoderParams:
    config: EncoderConfig = field(repr=False)
    w_in: np.ndarray
    b_in: np.ndarray
    blocks: list[BlockParams]


def init_encoder(config: EncoderConfig) -> EncoderParams:
    """Seeded init: every weight and bias uniform in +-1/sqrt(fan_in), norms at identity."""
    rng = np.random.default_rng(config.seed)
    dtype = np.dtype(config.dtype)
    C, F = config.d_model, config.ff_expansion * config.d_model

    def uniform(fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    def norm():
        return LayerNormParams(np.ones(C, dtype), np.zeros(C, dtype))

    def ff():
        return FeedForwardParams(uniform(C, (C, F)), uniform(C, F), uniform(F, (F, C)), uniform(F, C))

    blocks = []
    for _ in range(config.num_blocks):
        attn = MhsaParams(*(uniform(C, (C, C)) for _ in range(4)), n_heads=config.n_heads)
        conv = C2ConvParams(
            kernel=uniform(config.kernel_size, (config.kernel_size, C)),
            pw_in=uniform(C, (C, 2 * C)),
            pw_out=uniform(C, (C, C)),
            norm_gain=np.ones(C, dtype),
            norm_bias=np.zeros(C, dtype),
            chunk_size=config.chunk_size,
            lam=config.lam,
            right_mask=config.conv_right_mask,
            eps=config.eps,
        )
        blocks.append(BlockParams(norm(), ff(), norm(), attn, norm(), conv, norm(), ff(), norm()))
    w_in = uniform(config.input_dim, (config.input_dim, C))
    b_in = uniform(config.input_dim, C)
    return EncoderParams(config, w_in, b_in, blocks)


def named_arrays(obj, prefix: str = "") -> list[tuple[str, np.ndarray]]:
    """Flatten a parameter tree into ``(dotted_name, array)`` pairs in a fixed order."""
    out = []
    if isinstance(obj, np.ndarray):
        out.append((prefix, obj))
    elif isinstance(obj, list):
        for i, item in enumerate(obj):
            out.extend(named_arrays(item, f"{prefix}.{i}" if prefix else str(i)))
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, EncoderConfig):
        for f in dataclasses.fields(obj):
            name = f"{prefix}.{f.name}" if prefix else f.name
            out.extend(named_arrays(getattr(obj, f.name), name))
    return out


def replace_arrays(obj, arrays: dict[str, np.ndarray], prefix: str = ""):
    """Rebuild a parameter tree with arrays looked up by dotted name."""
    if isinstance(obj, np.ndarray):
        new = arrays[prefix]
        if new.shape != obj.shape:
            raise DimensionError(f"{prefix}: expected shape {obj.shape}, got {new.shape}")
        return new
    if isinstance(obj, list):
        return [replace_arrays(item, arrays, f"{prefix}.{i}" if prefix else str(i))
                for i, item in enumerate(obj)]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, EncoderConfig):
        changes = {}
        for f in dataclasses.fields(obj):
            name = f"{prefix}.{f.name}" if prefix else f.name
            value = getattr(obj, f.name)
            if isinstance(value, (np.ndarray, list)) or (
                dataclasses.is_dataclass(value) and not isinstance(value, EncoderConfig)
            ):
                changes[f.name] = replace_arrays(value, arrays, name)
        return dataclasses.replace(obj, **changes)
    return obj


def param_checksum(params: EncoderParams) -> str:
    import hashlib

    h = hashlib.sha256()
    for name, arr in named_arrays(params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def positional_encoding(positions: np.ndarray, d_model: int, dtype=np.float64) -> np.ndarray:
    """Sinusoidal absolute encoding; each row depends only on its own position."""
    positions = np.asarray(positions, dtype=np.float64)
    i = np.arange(0, d_model, 2, dtype=np.float64)
    freq = np.exp(-np.log(10000.0) * i / d_model)
    angles = positions[:, None] * freq[None, :]
    pe = np.zeros((positions.size, d_model))
    pe[:, 0::2] = np.sin(angles)
    pe[:, 1::2] = np.cos(angles[:, : d_model // 2])
    return pe.astype(dtype)


def _ln(x, p: LayerNormParams, eps):
    return layer_norm(x, p.gain, p.bias, eps)


def feed_forward(x, p: FeedForwardParams):
    return matmul(swish(matmul(x, p.w1) + p.b1), p.w2) + p.b2


def zero_padding(x: np.ndarray, valid_len: int) -> np.ndarray:
    if valid_len < x.shape[0]:
        x = x.copy()
        x[valid_len:] = 0.0
    return x


def embed(x: np.ndarray, params: EncoderParams, start: int = 0) -> np.ndarray:
    """Input projection plus position encoding for rows at absolute positions ``start...``."""
    cfg = params.config
    pe = positional_encoding(np.arange(start, start + x.shape[0]), cfg.d_model, params.w_in.dtype)
    return matmul(x, params.w_in) + params.b_in + pe


# Block stages, shared with the cached streaming path.

def pre_attention(z, block: BlockParams, eps):
    z_hat = 0.5 * feed_forward(_ln(z, block.ln_ff1, eps), block.ff1) + z
    return z_hat, _ln(z_hat, block.ln_att, eps)


def conv_input(z_tilde, block: BlockParams, eps, valid_len):
    u = conv_pre(_ln(z_tilde, block.ln_conv, eps), block.conv)
    return zero_padding(u, valid_len)


def post_conv(z_bar, block: BlockParams, eps, valid_len):
    out = _ln(0.5 * feed_forward(_ln(z_bar, block.ln_ff2, eps), block.ff2) + z_bar, block.ln_out, eps)
    return zero_padding(out, valid_len)


def block_forward(
    z: np.ndarray, block: BlockParams, kind: str, layout: ChunkLayout, mask: AttnMask, eps: float = 1e-5
) -> np.ndarray:
    """One Conformer block over the whole (padded) sequence ``[Lp, C]``."""
    if kind not in ("chunk", "ssc"):
        raise ConfigError(f"block kind must be 'chunk' or 'ssc', got {kind!r}")
    if mask.kind != kind:
        raise ConfigError(f"{kind} block given a {mask.kind} mask")
    if z.shape[0] != layout.padded_len:
        raise DimensionError(f"expected {layout.padded_len} rows, got {z.shape[0]}")
    valid_len = mask.valid_len
    z_hat, a_in = pre_attention(z, block, eps)
    attn_out, _ = mhsa(a_in, block.attn, mask)
    z_tilde = attn_out + z_hat
    u = conv_input(z_tilde, block, eps, valid_len)
    z_bar = conv_post(c2_depthwise(u, block.conv, layout), block.conv) + z_tilde
    return post_conv(z_bar, block, eps, valid_len)


def build_block_masks(config: EncoderConfig, layout: ChunkLayout, valid_len: int) -> dict[str, AttnMask]:
    masks = {"chunk": chunk_mask(layout, valid_len)}
    if config.use_ssc:
        plan = make_sampling_plan(layout)
        masks["ssc"] = ssc_mask(layout, plan, valid_len, causal=config.ssc_causal)
    return masks


def encoder_forward(x: np.ndarray, params: EncoderParams, valid_len: int | None = None) -> np.ndarray:
    """Offline forward over ``x: [L, input_dim]``; returns ``[Lp, d_model]``.

    Rows at or beyond ``valid_len`` (default ``L``) are zero in the output.
    """
    cfg = params.config
    x = np.asarray(x, dtype=params.w_in.dtype)
    if x.ndim != 2 or x.shape[1] != cfg.input_dim:
        raise DimensionError(f"expected input [L, {cfg.input_dim}], got {x.shape}")
    L = x.shape[0]
    if L < 1:
        raise DimensionError("encoder input must have at least one frame")
    valid_len = L if valid_len is None else int(valid_len)
    if not 0 < valid_len <= L:
        raise DimensionError(f"valid_len {valid_len} outside (0, {L}]")

    layout = make_layout(L, cfg.chunk_size)
    masks = build_block_masks(cfg, layout, valid_len)
    h = zero_padding(embed(pad_to(x, layout.padded_len), params), valid_len)
    for block, kind in zip(params.blocks, cfg.block_kinds()):
        h = block_forward(h, block, kind, layout, masks[kind], cfg.eps)
    return h
