"""Streaming chunk-wise Conformer encoder with sequentially sampled chunk attention
and chunked causal convolution, plus exact complexity accounting and causality probes."""

from .attention import MacCount, MhsaParams, mhsa, predict_macs
from .c2conv import C2ConvParams, c2_branches, c2_depthwise, conv_block
from .chunk_layout import (
    ChunkLayout,
    SamplingPlan,
    apply_plan,
    make_layout,
    make_sampling_plan,
    pad_batch,
)
from .encoder import EncoderConfig, EncoderParams, block_forward, encoder_forward, init_encoder
from .errors import ConfigError, DimensionError, ParseError, StreamStateError
from .masks import AttnMask, batched_masks, chunk_mask, global_mask, ssc_mask, time_restricted_mask
from .streaming import StreamState, open_stream, run_stream, stream_flush, stream_push

__version__ = "0.1.0"
