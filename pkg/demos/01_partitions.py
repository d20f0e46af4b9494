"""Contiguous chunks versus sequentially sampled chunks.

A 12-token sequence with chunk size 4 has three chunks. Sampling regroups the
tokens so that sampled chunk k holds every token whose index is k modulo the
number of chunks; each sampled chunk therefore touches every original chunk.
"""

import numpy as np

from chunkstream import apply_plan, make_layout, make_sampling_plan, pad_batch

layout = make_layout(12, 4)
plan = make_sampling_plan(layout)
tokens = np.arange(12)

print("contiguous chunks:", tokens.reshape(layout.num_chunks, 4).tolist())
print("sampled chunks:   ", apply_plan(tokens, plan, "gather").reshape(-1, 4).tolist())
print("scatter undoes gather:", np.array_equal(apply_plan(apply_plan(tokens, plan, "gather"), plan, "scatter"), tokens))

# lengths that are not a multiple of the chunk size are padded first
odd = make_layout(10, 4)
print(f"\nL=10, W=4 pads to {odd.padded_len}; sampled order:", make_sampling_plan(odd).gather.tolist())

# batches are padded to a common chunk-aligned length
batch, lengths = pad_batch([np.ones((12, 2)), np.ones((9, 2))], 4)
print("batch shape", batch.shape, "true lengths", lengths)
