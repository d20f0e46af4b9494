"""Command-line harness: ``bench``, ``mask-dump``, ``probe`` and ``stream``.

Exit codes: 0 ok, 1 property violation, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import bench
from .chunk_layout import make_layout
from .encoder import EncoderConfig, encoder_forward, init_encoder
from .errors import ConfigError, DimensionError, ParseError
from .masks import KINDS, build_mask
from .probes import (
    causality_violations,
    dependency_matrix,
    offline_runner,
    reachability_closure,
    stream_runner,
)
from .serialization import load_config, read_frames, write_frames
from .streaming import run_stream

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags below override it")
    p.add_argument("--chunk-size", type=int)
    p.add_argument("--d-model", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--pairs", type=int, help="number of (chunk, sampled-chunk) block pairs")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--kernel", type=int)
    p.add_argument("--input-dim", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default stdout)")


def _config_from_args(args, **overrides) -> EncoderConfig:
    base = load_config(args.config) if getattr(args, "config", None) else EncoderConfig()
    flags = {
        "chunk_size": args.chunk_size,
        "d_model": args.d_model,
        "n_heads": args.heads,
        "block_pairs": args.pairs,
        "lam": args.lam,
        "kernel_size": args.kernel,
        "input_dim": args.input_dim,
        "seed": args.seed,
    }
    flags.update(overrides)
    changes = {k: v for k, v in flags.items() if v is not None}
    if "kernel_size" in changes and base.right_mask is not None:
        changes.setdefault("right_mask", None)
    return dataclasses.replace(base, **changes)


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args) -> int:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"unknown kind {k!r}; expected one of {KINDS}")
    W = args.chunk_size or 16
    C = args.d_model or 64
    h = args.heads or 4
    base = args.base or 8 * W
    lengths = [base * m for m in range(1, args.multiples + 1)]
    records = bench.run_bench(
        kinds, lengths, W=W, C=C, h=h, repeats=args.repeats, seed=args.seed,
        dtype=args.dtype, parallel=args.parallel,
    )
    _write(args, "\n".join([bench.CSV_HEADER] + [r.csv_row() for r in records]) + "\n")
    summary = bench.summarize(records)
    text = json.dumps(summary, indent=1)
    if args.summary:
        with open(args.summary, "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text + "\n")
    return EXIT_OK if all(s["macs_match_prediction"] for s in summary) else EXIT_VIOLATION


def cmd_mask_dump(args) -> int:
    W = args.chunk_size or 4
    mask = build_mask(args.kind, make_layout(args.length, W))
    _write(args, mask.to_text())
    return EXIT_OK


def cmd_probe(args) -> int:
    overrides = {"ssc_causal": False} if args.leak_ssc else {}
    cfg = _config_from_args(args, **overrides)
    if args.input_dim is None and not args.config:
        cfg = dataclasses.replace(cfg, input_dim=cfg.d_model)
    L = args.length
    if L % cfg.chunk_size:
        raise ConfigError(f"probe length {L} must be a multiple of chunk size {cfg.chunk_size}")
    params = init_encoder(cfg)
    x = np.random.default_rng(args.seed).normal(size=(L, cfg.input_dim))
    run = offline_runner(params) if args.mode == "offline" else stream_runner(params, args.mode)
    dep = dependency_matrix(run, x, delta=args.delta)
    leaks = causality_violations(dep, cfg.chunk_size)
    report = {
        "mode": args.mode,
        "L": L,
        "W": cfg.chunk_size,
        "blocks": cfg.num_blocks,
        "dependencies": int(dep.sum()),
        "violations": len(leaks),
        "leaks": leaks[:50],
    }
    if args.mode == "offline":
        closure = reachability_closure(cfg, L)
        report["outside_reachability"] = int((dep & ~closure).sum())
    _write(args, json.dumps(report, indent=1) + "\n")
    return EXIT_VIOLATION if leaks else EXIT_OK


def cmd_stream(args) -> int:
    frames = read_frames(args.input)
    overrides = {"input_dim": frames.shape[1]} if frames.shape[1] else {}
    if args.chunk_only:
        overrides["use_ssc"] = False
    cfg = _config_from_args(args, **overrides)
    if frames.shape[0] == 0:
        _write(args, "")
        sys.stderr.write("0 chunks\n")
        return EXIT_OK
    params = init_encoder(cfg)
    chunks = run_stream(params, frames, args.mode)
    W = cfg.chunk_size
    lines, worst = [], 0.0
    emitted = 0
    for i, chunk in enumerate(chunks):
        emitted += chunk.shape[0]
        offline = encoder_forward(frames[:emitted], params)[i * W : emitted]
        diff = float(np.max(np.abs(chunk - offline)))
        worst = max(worst, diff)
        lines.append(f"chunk {i}: rows={chunk.shape[0]} max_abs_diff={diff:.3e}")
    if args.out:
        write_frames(args.out, np.concatenate(chunks, axis=0),
                     header=f"{len(chunks)} chunks, mode={args.mode}, W={W}")
    else:
        for chunk in chunks:
            for row in chunk:
                sys.stdout.write(" ".join(repr(float(v)) for v in row) + "\n")
    sys.stderr.write("\n".join(lines) + "\n")
    exact_expected = args.mode == "recompute" or not cfg.use_ssc
    return EXIT_VIOLATION if exact_expected and worst != 0.0 else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chunkstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="attention scaling benchmark, CSV output")
    _add_model_flags(p)
    p.add_argument("--kinds", default="chunk,ssc,time_restricted,global")
    p.add_argument("--base", type=int, help="base length (default 8 * chunk size)")
    p.add_argument("--multiples", type=int, default=8)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--dtype", choices=("float64", "float32"), default="float64")
    p.add_argument("--parallel", action="store_true", help="run cells concurrently")
    p.add_argument("--summary", help="write fit summary JSON here (default stderr)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("mask-dump", help="print an attention mask as a 0/1 grid")
    _add_model_flags(p)
    p.add_argument("--kind", choices=KINDS, default="ssc")
    p.add_argument("--length", type=int, default=12)
    p.set_defaults(func=cmd_mask_dump)

    p = sub.add_parser("probe", help="finite-difference causality probe")
    _add_model_flags(p)
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--mode", choices=("offline", "recompute", "cached"), default="recompute")
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--leak-ssc", action="store_true",
                   help="negative control: drop the chunk-order condition in sampled chunks")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("stream", help="stream a frame file chunk by chunk")
    _add_model_flags(p)
    p.add_argument("input", help="frame file: one frame per line, '#' comments")
    p.add_argument("--mode", choices=("recompute", "cached"), default="recompute")
    p.add_argument("--chunk-only", action="store_true", help="replace sampled-chunk blocks with chunk blocks")
    p.set_defaults(func=cmd_stream)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DimensionError, ParseError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
