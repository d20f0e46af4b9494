"""Config files, parameter checkpoints and frame files.

Config: ``key = value`` lines, one per ``EncoderConfig`` field, ``#`` comments.

Checkpoint: ``<path>`` holds every parameter array as little-endian float64,
concatenated in ``named_arrays`` order; ``<path>.json`` is the manifest of
names, shapes and offsets plus the config.

Frames: one frame per line, space-separated decimals, ``#`` comment lines.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .encoder import EncoderConfig, EncoderParams, init_encoder, named_arrays, replace_arrays
from .errors import ConfigError, ParseError

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(EncoderConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if "None" in kind and raw.lower() in ("none", ""):
        return None
    if kind.startswith("bool"):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    return raw


def dump_config(config: EncoderConfig) -> str:
    lines = [f"{k} = {v}" for k, v in dataclasses.asdict(config).items()]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> EncoderConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ParseError(f"unknown config key {key!r}", lineno)
        values[key] = _parse_value(key, raw)
    return EncoderConfig(**values)


def save_config(path, config: EncoderConfig) -> None:
    Path(path).write_text(dump_config(config))


def load_config(path) -> EncoderConfig:
    return parse_config(Path(path).read_text())


def save_checkpoint(path, params: EncoderParams) -> None:
    path = Path(path)
    entries, offset = [], 0
    with path.open("wb") as fh:
        for name, arr in named_arrays(params):
            data = np.ascontiguousarray(arr, dtype="<f8")
            fh.write(data.tobytes())
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += data.size
    manifest = {
        "format": "float64-le",
        "count": offset,
        "config": dataclasses.asdict(params.config),
        "arrays": entries,
    }
    Path(f"{path}.json").write_text(json.dumps(manifest, indent=1))


def load_checkpoint(path) -> EncoderParams:
    path = Path(path)
    manifest = json.loads(Path(f"{path}.json").read_text())
    config = EncoderConfig(**manifest["config"])
    flat = np.fromfile(path, dtype="<f8")
    if flat.size != manifest["count"]:
        raise ParseError(f"checkpoint holds {flat.size} values, manifest says {manifest['count']}")
    dtype = np.dtype(config.dtype)
    arrays = {}
    for e in manifest["arrays"]:
        size = int(np.prod(e["shape"], dtype=np.int64))
        chunk = flat[e["offset"] : e["offset"] + size]
        arrays[e["name"]] = chunk.reshape(e["shape"]).astype(dtype)
    template = init_encoder(config)
    missing = {n for n, _ in named_arrays(template)} - arrays.keys()
    if missing:
        raise ParseError(f"checkpoint lacks arrays: {sorted(missing)[:5]}")
    return replace_arrays(template, arrays)


def read_frames(path, width: int | None = None) -> np.ndarray:
    """Parse a frame file into ``[n, d]``; raises ``ParseError`` naming the bad line."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in text.split()]
        except ValueError as exc:
            raise ParseError(f"non-numeric value: {exc}", lineno) from None
        expected = width if width is not None else (len(rows[0]) if rows else len(row))
        if len(row) != expected:
            raise ParseError(f"expected {expected} values, got {len(row)}", lineno)
        rows.append(row)
    if not rows:
        return np.zeros((0, width or 0))
    return np.array(rows, dtype=np.float64)


def write_frames(path, frames: np.ndarray, header: str | None = None) -> None:
    with Path(path).open("w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for row in np.asarray(frames):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
