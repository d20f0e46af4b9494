"""Multiply-accumulate counts of one attention layer as the sequence grows.

Chunked and sampled-chunk attention cost the same and grow linearly in L.
Global attention grows quadratically, and time-restricted attention settles
near half of global attention's score cost.
"""

import numpy as np

from chunkstream import make_layout, mhsa
from chunkstream.bench import random_mhsa_params, run_bench, summarize
from chunkstream.masks import build_mask

W, C = 16, 64
params = random_mhsa_params(C, 4, np.random.default_rng(0))
print(f"{'L':>6} {'chunk':>12} {'ssc':>12} {'time_restr':>12} {'global':>12}")
for L in (64, 128, 256, 512, 1024):
    x = np.random.default_rng(L).normal(size=(L, C))
    row = [mhsa(x, params, build_mask(k, make_layout(L, W)))[1] for k in ("chunk", "ssc", "time_restricted", "global")]
    print(f"{L:>6} " + " ".join(f"{m.total:>12,}" for m in row)
          + f"   score ratio tr/global = {row[2].qk_scores / row[3].qk_scores:.3f}")

print("\nwall-time fits over lengths 128..1024 (median of 5 repeats):")
for s in summarize(run_bench(["chunk", "ssc", "global"], [128 * m for m in range(1, 9)], W=W, C=C, repeats=5)):
    fit = s["time_fit"]
    detail = f"slope={fit['slope']:.2e} s/token" if s["model"] == "linear" else f"quad={fit['quad_coef']:.2e} t={fit['quad_tstat']:.1f}"
    print(f"  {s['kind']:>7}: {s['model']:<9} R2={fit['r2']:.3f} {detail}")
