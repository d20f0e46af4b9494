"""Attention-admissibility masks for chunked, sampled-chunk and time-restricted attention.

All masks are stored in original token coordinates: ``admissible[q, k]`` says
whether query ``q`` may read key ``k``. The attention layer permutes them
together with the activations when it runs chunk-local blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chunk_layout import ChunkLayout, SamplingPlan, make_layout, make_sampling_plan
from .errors import ConfigError, DimensionError

KINDS = ("chunk", "ssc", "time_restricted", "global")


@dataclass(frozen=True)
class AttnMask:
    kind: str
    admissible: np.ndarray
    layout: ChunkLayout
    valid_len: int
    plan: SamplingPlan | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.admissible.shape[0]

    def blocks(self) -> np.ndarray:
        """Per-chunk ``[Cn, W, W]`` stack of the diagonal blocks.

        For ``ssc`` the blocks are taken in sampled order (rows and columns
        permuted by the plan), otherwise in original order.
        """
        W, Cn = self.layout.chunk_size, self.layout.num_chunks
        order = self.plan.gather if self.kind == "ssc" else np.arange(self.size)
        rows = order.reshape(Cn, W)
        # index only the diagonal blocks so the cost stays O(L W)
        return self.admissible[rows[:, :, None], rows[:, None, :]]

    def to_text(self) -> str:
        return mask_to_text(self.admissible)


def _check_valid_len(layout: ChunkLayout, valid_len: int | None) -> int:
    if valid_len is None:
        return layout.original_len
    if not 0 <= valid_len <= layout.padded_len:
        raise DimensionError(
            f"valid length {valid_len} exceeds padded size {layout.padded_len}"
        )
    return int(valid_len)


def _valid_pairs(layout: ChunkLayout, valid_len: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(layout.padded_len)
    valid = idx < valid_len
    return idx, valid[:, None] & valid[None, :]


def chunk_mask(layout: ChunkLayout, valid_len: int | None = None) -> AttnMask:
    """Block-diagonal mask: attend only within the query's own chunk."""
    valid_len = _check_valid_len(layout, valid_len)
    idx, both = _valid_pairs(layout, valid_len)
    c = idx // layout.chunk_size
    adm = (c[:, None] == c[None, :]) & both
    return AttnMask("chunk", adm, layout, valid_len)


def ssc_mask(
    layout: ChunkLayout,
    plan: SamplingPlan | None = None,
    valid_len: int | None = None,
    *,
    causal: bool = True,
) -> AttnMask:
    """Mask for attention inside sampled chunks.

    Query ``q`` reads key ``k`` when both sit in the same sampled chunk and
    ``k``'s regular chunk does not come after ``q``'s. ``causal=False`` drops
    the second condition; it leaks future chunks and exists only as a negative
    control for the causality probes.
    """
    if plan is None:
        plan = make_sampling_plan(layout)
    if len(plan.gather) != layout.padded_len or plan.chunk_size != layout.chunk_size:
        raise DimensionError("sampling plan does not match layout")
    valid_len = _check_valid_len(layout, valid_len)
    idx, both = _valid_pairs(layout, valid_len)
    group = plan.sampled_chunk_of(idx)
    adm = (group[:, None] == group[None, :]) & both
    if causal:
        c = idx // layout.chunk_size
        adm &= c[None, :] <= c[:, None]
    return AttnMask("ssc", adm, layout, valid_len, plan)


def time_restricted_mask(layout: ChunkLayout, valid_len: int | None = None) -> AttnMask:
    """Lower block-triangular mask: current chunk plus every earlier chunk."""
    valid_len = _check_valid_len(layout, valid_len)
    idx, both = _valid_pairs(layout, valid_len)
    c = idx // layout.chunk_size
    adm = (c[None, :] <= c[:, None]) & both
    return AttnMask("time_restricted", adm, layout, valid_len)


def global_mask(layout: ChunkLayout, valid_len: int | None = None) -> AttnMask:
    """Unrestricted attention over the valid region."""
    valid_len = _check_valid_len(layout, valid_len)
    _, both = _valid_pairs(layout, valid_len)
    return AttnMask("global", both.copy(), layout, valid_len)


def build_mask(kind: str, layout: ChunkLayout, valid_len: int | None = None) -> AttnMask:
    if kind == "chunk":
        return chunk_mask(layout, valid_len)
    if kind == "ssc":
        return ssc_mask(layout, None, valid_len)
    if kind == "time_restricted":
        return time_restricted_mask(layout, valid_len)
    if kind == "global":
        return global_mask(layout, valid_len)
    raise ConfigError(f"unknown mask kind {kind!r}; expected one of {KINDS}")


def batched_masks(
    lengths: list[int], chunk_size: int, kind: str, padded_len: int | None = None
) -> list[AttnMask]:
    """One mask per batch element, all sized to the shared padded length.

    Masks are rebuilt on every call from the given lengths and chunk size.
    """
    longest = make_layout(max(lengths), chunk_size)
    if padded_len is None:
        padded_len = longest.padded_len
    if padded_len % chunk_size:
        raise DimensionError(f"padded length {padded_len} is not a multiple of {chunk_size}")
    layout = make_layout(padded_len, chunk_size)
    out = []
    for n in lengths:
        if n > padded_len:
            raise DimensionError(f"length {n} exceeds padded size {padded_len}")
        out.append(build_mask(kind, layout, n))
    return out


def mask_to_text(admissible: np.ndarray) -> str:
    """Render a boolean matrix as rows of '1'/'0' characters."""
    rows = ("".join("1" if v else "0" for v in row) for row in np.asarray(admissible))
    return "\n".join(rows) + "\n"


def mask_from_text(text: str) -> np.ndarray:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return np.array([[ch == "1" for ch in row] for row in rows], dtype=bool)
