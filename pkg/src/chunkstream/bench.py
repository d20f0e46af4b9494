"""Attention scaling benchmark: wall time and MAC counts versus sequence length.

Lengths are multiples of a base length. Chunked kinds should scale linearly,
global and time-restricted attention quadratically.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attention import MhsaParams, mhsa, predict_macs
from .chunk_layout import make_layout
from .errors import ConfigError
from .masks import KINDS, build_mask

CSV_HEADER = "kind,L,W,C,h,repeat,wall_time_s,measured_macs,predicted_macs"
LINEAR_KINDS = ("chunk", "ssc")


@dataclass(frozen=True)
class BenchRecord:
    kind: str
    L: int
    W: int
    C: int
    h: int
    repeat: int
    wall_time_s: float
    measured_macs: int
    predicted_macs: int

    def csv_row(self) -> str:
        return (
            f"{self.kind},{self.L},{self.W},{self.C},{self.h},{self.repeat},"
            f"{self.wall_time_s:.9f},{self.measured_macs},{self.predicted_macs}"
        )


def random_mhsa_params(C: int, h: int, rng: np.random.Generator, dtype=np.float64) -> MhsaParams:
    bound = 1.0 / np.sqrt(C)
    ws = [rng.uniform(-bound, bound, size=(C, C)).astype(dtype) for _ in range(4)]
    return MhsaParams(*ws, n_heads=h)


def _setup_cell(kind, L, W, C, h, seed, dtype):
    rng = np.random.default_rng([seed, L])
    params = random_mhsa_params(C, h, rng, dtype)
    x = rng.normal(size=(L, C)).astype(dtype)
    mask = build_mask(kind, make_layout(L, W))
    return x, params, mask, predict_macs(kind, L, W, C).total


def _time_once(cell, kind, L, W, C, h, r) -> BenchRecord:
    x, params, mask, predicted = cell
    t0 = time.perf_counter()
    _, macs = mhsa(x, params, mask)
    dt = time.perf_counter() - t0
    return BenchRecord(kind, L, W, C, h, r, dt, macs.total, predicted)


def run_bench(
    kinds, lengths, W=16, C=64, h=4, repeats=3, seed=0, dtype="float64", parallel=False
) -> list[BenchRecord]:
    """One record per (kind, L, repeat), sorted in that order.

    Sequential runs sweep every cell once per repeat, so a slow spell on the
    machine is spread over all lengths instead of inflating a single cell.
    ``parallel`` runs whole cells concurrently instead.
    """
    for kind in kinds:
        if kind not in KINDS:
            raise ConfigError(f"unknown kind {kind!r}; expected one of {KINDS}")
    for L in lengths:
        if L % W:
            raise ConfigError(f"length {L} is not a multiple of chunk size {W}")
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    dtype = np.dtype(dtype)
    keys = [(k, L) for k in kinds for L in lengths]
    cells = {key: _setup_cell(*key, W, C, h, seed, dtype) for key in keys}
    # one untimed pass so kernel compilation and first-touch costs are excluded
    for key in keys:
        mhsa(*cells[key][:3])

    def run_cell(key):
        return [_time_once(cells[key], *key, W, C, h, r) for r in range(repeats)]

    if parallel:
        with ThreadPoolExecutor() as pool:
            records = [rec for recs in pool.map(run_cell, keys) for rec in recs]
    else:
        records = [_time_once(cells[key], *key, W, C, h, r) for r in range(repeats) for key in keys]
    order = {key: i for i, key in enumerate(keys)}
    return sorted(records, key=lambda rec: (order[(rec.kind, rec.L)], rec.repeat))


def _r2(y, fit):
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot


def fit_linear(x, y) -> dict:
    coef = np.polyfit(x, y, 1)
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "r2": _r2(y, np.polyval(coef, x))}


def fit_quadratic(x, y) -> dict:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    coef, cov = np.polyfit(x, y, 2, cov=True)
    se = float(np.sqrt(cov[0, 0])) if cov[0, 0] > 0 else 0.0
    return {
        "quad_coef": float(coef[0]),
        "quad_tstat": float(coef[0] / se) if se > 0 else float("inf"),
        "r2": _r2(y, np.polyval(coef, x)),
    }


def summarize(records: list[BenchRecord]) -> list[dict]:
    """Per-kind fits over median wall times and MAC counts."""
    out = []
    for kind in dict.fromkeys(r.kind for r in records):
        rows = [r for r in records if r.kind == kind]
        Ls = sorted({r.L for r in rows})
        times = np.array([np.median([r.wall_time_s for r in rows if r.L == L]) for L in Ls])
        macs = np.array([next(r.measured_macs for r in rows if r.L == L) for L in Ls], dtype=float)
        summary = {"kind": kind, "lengths": Ls, "median_wall_time_s": times.tolist()}
        if kind in LINEAR_KINDS:
            summary["model"] = "linear"
            summary["time_fit"] = fit_linear(Ls, times)
            summary["mac_fit"] = fit_linear(Ls, macs)
        else:
            summary["model"] = "quadratic"
            summary["time_fit"] = fit_quadratic(Ls, times)
            summary["mac_fit"] = fit_quadratic(Ls, macs)
        summary["macs_match_prediction"] = all(r.measured_macs == r.predicted_macs for r in rows)
        out.append(summary)
    return out

