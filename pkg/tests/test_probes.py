import dataclasses

import numpy as np
import pytest

from chunkstream.encoder import EncoderConfig, init_encoder
from chunkstream.probes import (
    causality_violations,
    conv_reach,
    dependency_matrix,
    future_pairs,
    offline_runner,
    reachability_closure,
    stream_runner,
)

CFG = EncoderConfig(input_dim=4, d_model=8, n_heads=2, block_pairs=2, chunk_size=4, seed=3)


def test_conv_reach_literal():
    r = conv_reach(8, 4, 5, 2, 0.5)
    # token 3: chunked reaches 1..3 (chunk 0), causal reaches 1..3
    assert np.nonzero(r[3])[0].tolist() == [1, 2, 3]
    # token 4: chunked reaches 4..6, causal reaches 2..4
    assert np.nonzero(r[4])[0].tolist() == [2, 3, 4, 5, 6]


def test_closure_has_no_future_pairs():
    clo = reachability_closure(CFG, 24)
    assert not (clo & future_pairs(4, 24)).any()


def test_closure_single_layer_is_mask_plus_conv():
    cfg = dataclasses.replace(CFG, block_pairs=1)
    clo = reachability_closure(cfg, 12, kinds=["chunk"])
    assert clo[0, :4].all() and not clo[0, 4:].any()


@pytest.mark.parametrize("mode", ["offline", "recompute", "cached"])
def test_empirical_dependencies_are_causal(rng, mode):
    params = init_encoder(CFG)
    x = rng.normal(size=(16, 4))
    run = offline_runner(params) if mode == "offline" else stream_runner(params, mode)
    dep = dependency_matrix(run, x)
    assert causality_violations(dep, 4) == []
    if mode == "offline":
        assert not (dep & ~reachability_closure(CFG, 16)).any()
        assert dep.sum() > 0


def test_leaky_ssc_is_caught(rng):
    leaky = init_encoder(dataclasses.replace(CFG, ssc_causal=False))
    dep = dependency_matrix(offline_runner(leaky), rng.normal(size=(16, 4)))
    assert len(causality_violations(dep, 4)) > 0


@pytest.mark.parametrize("Cn", [2, 3, 5])
def test_attention_closure_grows_context(Cn):
    L = 4 * Cn
    chunk_only = reachability_closure(dataclasses.replace(CFG, use_ssc=False), L, include_conv=False)
    interleaved = reachability_closure(CFG, L, include_conv=False)
    assert np.array_equal(chunk_only, reachability_closure(CFG, L, kinds=["chunk"] * 4, include_conv=False))
    assert not (chunk_only & ~interleaved).any()
    assert (interleaved & ~chunk_only).any()


@pytest.mark.parametrize("Cn", [3, 8, 16])
def test_full_closure_grows_unless_saturated(Cn):
    L = 4 * Cn
    chunk_only = reachability_closure(dataclasses.replace(CFG, use_ssc=False), L)
    interleaved = reachability_closure(CFG, L)
    causal = ~future_pairs(4, L)
    assert not (chunk_only & ~interleaved).any()
    saturated = np.array_equal(chunk_only, causal)
    assert (interleaved & ~chunk_only).any() == (not saturated)
    if Cn == 16:
        assert not saturated
