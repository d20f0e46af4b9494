"""Regular chunk partitions and the sequential-sampling re-partition.

A sequence of ``L`` tokens is right-padded to ``Lp``, the next multiple of the
chunk size ``W``, giving ``Cn = Lp / W`` regular chunks. The sampled partition
walks the padded sequence with stride ``Cn``: sampled chunk ``k`` holds tokens
``k, k + Cn, k + 2*Cn, ...`` (exactly ``W`` of them). Both partitions are
realized as row permutations so that chunk-local work can run as one batched
computation over a ``[Cn, W, ...]`` view.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class ChunkLayout:
    original_len: int
    chunk_size: int

    def __post_init__(self):
        if self.original_len < 1 or self.chunk_size < 1:
            raise ConfigError(
                f"length and chunk size must be positive, got L={self.original_len}, "
                f"W={self.chunk_size}"
            )

    @property
    def padded_len(self) -> int:
        W = self.chunk_size
        return -(-self.original_len // W) * W

    @property
    def num_chunks(self) -> int:
        return self.padded_len // self.chunk_size

    @property
    def padding(self) -> int:
        return self.padded_len - self.original_len

    def chunk_index(self, i):
        return np.asarray(i) // self.chunk_size


def make_layout(L: int, W: int) -> ChunkLayout:
    return ChunkLayout(int(L), int(W))


@dataclass(frozen=True)
class SamplingPlan:
    """Row permutations realizing the sampled partition.

    ``gather[k*W + j]`` is the original index of the j-th member of sampled
    chunk k; ``scatter`` is its inverse.
    """

    gather: np.ndarray
    scatter: np.ndarray
    chunk_size: int

    @property
    def num_chunks(self) -> int:
        return len(self.gather) // self.chunk_size

    def sampled_chunk_of(self, i):
        """Sampled-chunk id of original token index ``i``."""
        return self.scatter[np.asarray(i)] // self.chunk_size


def make_sampling_plan(layout: ChunkLayout) -> SamplingPlan:
    W, Cn = layout.chunk_size, layout.num_chunks
    # [j, k] -> j*Cn + k; transposing lists sampled chunk k contiguously
    gather = np.arange(layout.padded_len).reshape(W, Cn).T.ravel()
    scatter = np.empty_like(gather)
    scatter[gather] = np.arange(gather.size)
    gather.setflags(write=False)
    scatter.setflags(write=False)
    return SamplingPlan(gather=gather, scatter=scatter, chunk_size=W)


def apply_plan(x: np.ndarray, plan: SamplingPlan, direction: str = "gather") -> np.ndarray:
    """Permute the rows of ``x`` into sampled order or back to original order."""
    x = np.asarray(x)
    if x.shape[0] != len(plan.gather):
        raise DimensionError(
            f"first axis {x.shape[0]} does not match plan length {len(plan.gather)}"
        )
    if direction == "gather":
        return x[plan.gather]
    if direction == "scatter":
        return x[plan.scatter]
    raise ConfigError(f"direction must be 'gather' or 'scatter', got {direction!r}")


def pad_to(x: np.ndarray, length: int) -> np.ndarray:
    """Right-pad the first axis of ``x`` with zero rows up to ``length``."""
    x = np.asarray(x)
    if x.shape[0] > length:
        raise DimensionError(f"cannot pad {x.shape[0]} rows down to {length}")
    if x.shape[0] == length:
        return x
    pad = np.zeros((length - x.shape[0],) + x.shape[1:], dtype=x.dtype)
    return np.concatenate([x, pad], axis=0)


def pad_batch(sequences: list[np.ndarray], W: int) -> tuple[np.ndarray, list[int]]:
    """Stack variable-length ``[L_b, d]`` sequences into ``[B, Lp_max, d]``.

    ``Lp_max`` is the longest length rounded up to a multiple of ``W``.
    """
    if not sequences:
        raise DimensionError("pad_batch needs at least one sequence")
    if W < 1:
        raise ConfigError(f"chunk size must be positive, got {W}")
    seqs = [np.asarray(s) for s in sequences]
    dims = {s.shape[1:] for s in seqs}
    if len(dims) != 1:
        raise DimensionError(f"sequences have mixed feature shapes: {sorted(dims)}")
    lengths = [s.shape[0] for s in seqs]
    padded = make_layout(max(lengths), W).padded_len
    return np.stack([pad_to(s, padded) for s in seqs]), lengths
