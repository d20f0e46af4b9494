"""Attention scopes as boolean query-by-key grids.

Rows are queries, columns are keys, in original token order. The sampled-chunk
mask keeps the chunk-level causality of the other two: a query never reads a
key from a later chunk, even when both sit in the same sampled chunk.
"""

import numpy as np

from chunkstream import batched_masks, chunk_mask, make_layout, ssc_mask, time_restricted_mask

layout = make_layout(12, 4)
for name, build in (("chunk", chunk_mask), ("sampled chunk", ssc_mask), ("time restricted", time_restricted_mask)):
    print(f"{name}:")
    print(build(layout).to_text())

adm = ssc_mask(layout).admissible
for q in (0, 3, 6, 9):
    print(f"query {q} reads keys {np.nonzero(adm[q])[0].tolist()}")

# per-utterance masks for a padded batch: padding is never read or written
short = batched_masks([12, 9], 4, "ssc")[1]
print("\nlength-9 element, rows 8..11 of the sampled-chunk mask:")
print("\n".join(short.to_text().splitlines()[8:]))
