"""Dependency probes: empirical finite-difference sparsity and symbolic reachability.

``dependency_matrix`` perturbs one input frame at a time and records which
output tokens change at all (exact comparison). ``reachability_closure``
composes per-layer boolean "may read" relations through the whole stack. The
empirical pattern must sit inside the closure, and neither may contain a pair
where the output token's chunk precedes the input token's chunk.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .chunk_layout import make_layout, make_sampling_plan
from .encoder import EncoderConfig, EncoderParams, encoder_forward
from .masks import chunk_mask, ssc_mask
from .streaming import run_stream


def offline_runner(params: EncoderParams) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: encoder_forward(x, params)[: x.shape[0]]


def stream_runner(params: EncoderParams, mode: str) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.concatenate(run_stream(params, x, mode), axis=0)


def dependency_matrix(run: Callable[[np.ndarray], np.ndarray], x: np.ndarray, delta: float = 1e-3) -> np.ndarray:
    """``dep[t, j]`` is true when perturbing frame ``j`` by ``delta`` changes output row ``t``."""
    x = np.asarray(x)
    base = run(x)
    L = x.shape[0]
    dep = np.zeros((base.shape[0], L), dtype=bool)
    for j in range(L):
        xp = x.copy()
        xp[j] += delta
        dep[:, j] = np.any(run(xp) != base, axis=1)
    return dep


def future_pairs(W: int, L: int) -> np.ndarray:
    """``forbidden[t, j]``: input ``j`` lies in a chunk strictly after output ``t``'s."""
    c = np.arange(L) // W
    return c[None, :] > c[:, None]


def causality_violations(dep: np.ndarray, W: int) -> list[tuple[int, int]]:
    bad = dep & future_pairs(W, dep.shape[1])[: dep.shape[0]]
    return [(int(t), int(j)) for t, j in zip(*np.nonzero(bad))]


def conv_reach(L: int, W: int, K: int, R: int, lam: float) -> np.ndarray:
    """``reach[t, j]``: depthwise output ``t`` reads input ``j`` through a live tap."""
    half = (K - 1) // 2
    t = np.arange(L)[:, None]
    j = np.arange(L)[None, :]
    off = j - t
    reach = np.zeros((L, L), dtype=bool)
    if lam > 0:
        reach |= (np.abs(off) <= half) & (t // W == j // W)
    if lam < 1:
        reach |= (off >= -half) & (off <= half) & ~((off >= 1) & (off <= R))
    return reach


def _bool_compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Relation composition: ``(a . b)[t, j] = any_m a[t, m] and b[m, j]``."""
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def layer_relations(
    config: EncoderConfig, L: int, kinds: list[str] | None = None, include_conv: bool = True
) -> list[np.ndarray]:
    """One boolean ``[Lp, Lp]`` relation per block (residual paths included).

    ``include_conv=False`` keeps only the attention paths, isolating the
    context that the attention scopes themselves provide.
    """
    layout = make_layout(L, config.chunk_size)
    Lp = layout.padded_len
    kinds = config.block_kinds() if kinds is None else kinds
    eye = np.eye(Lp, dtype=bool)
    valid = np.arange(Lp) < L
    conv = conv_reach(Lp, config.chunk_size, config.kernel_size, config.conv_right_mask, config.lam)
    conv &= valid[None, :]
    if not include_conv:
        conv = np.zeros_like(conv)
    masks = {"chunk": chunk_mask(layout, L).admissible}
    if "ssc" in kinds:
        masks["ssc"] = ssc_mask(layout, make_sampling_plan(layout), L, causal=config.ssc_causal).admissible
    rels = []
    for kind in kinds:
        attn = eye | masks[kind]
        rel = _bool_compose(eye | conv, attn)
        rels.append(rel & valid[:, None] & valid[None, :])
    return rels


def reachability_closure(
    config: EncoderConfig, L: int, kinds: list[str] | None = None, include_conv: bool = True
) -> np.ndarray:
    """Which input tokens each output token may depend on through the whole stack."""
    rels = layer_relations(config, L, kinds, include_conv)
    total = np.eye(rels[0].shape[0], dtype=bool)
    for rel in rels:
        total = _bool_compose(rel, total)
    valid = np.arange(total.shape[0]) < L
    return total & valid[:, None] & valid[None, :]
