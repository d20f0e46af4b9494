"""The two branches of the chunked causal convolution on a toy signal.

Both branches share one kernel. The causal branch sees only the past but may
look into earlier chunks; the chunked branch sees future frames but only
within the current chunk. Neither reads past the end of the current chunk, so
blending them adds no latency.
"""

import numpy as np

from chunkstream import C2ConvParams, c2_branches, c2_depthwise, make_layout

x = np.array([[1.0], [2.0], [3.0], [4.0]])
p = C2ConvParams(np.ones((3, 1)), np.eye(1, 2), np.eye(1), np.ones(1), np.zeros(1), chunk_size=2, lam=0.5)
chunked, causal = c2_branches(x, p, make_layout(4, 2))
print("x        ", x[:, 0].tolist())
print("causal   ", causal[:, 0].tolist())
print("chunked  ", chunked[:, 0].tolist())
print("blend 0.5", c2_depthwise(x, p, make_layout(4, 2))[:, 0].tolist())

# receptive field with the default 15-tap kernel: impulse at frame 10, W=8
L, W = 24, 8
layout = make_layout(L, W)
impulse = np.zeros((L, 1))
impulse[10] = 1.0
for lam in (0.0, 1.0, 0.7):
    q = C2ConvParams(np.ones((15, 1)), np.eye(1, 2), np.eye(1), np.ones(1), np.zeros(1), chunk_size=W, lam=lam)
    touched = np.nonzero(c2_depthwise(impulse, q, layout)[:, 0])[0].tolist()
    print(f"lambda={lam}: outputs touched by frame 10 -> {touched}")
