"""Self-describing checkpoint container.

Layout: 8-byte magic, little-endian uint64 header length, a UTF-8 JSON
header (model config, training metadata, tensor manifest), then the named
tensors as raw little-endian float64 in manifest order. Loading is bitwise
faithful.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import BadCheckpoint
from .model import ModelConfig, Params, check_params

MAGIC = b"SZDCKPT1"


def save_tensors(
    path: str | Path,
    tensors: Params,
    cfg: ModelConfig,
    metadata: dict | None = None,
) -> None:
    """Write an arbitrary named-tensor container (see save_checkpoint)."""
    names = sorted(tensors)
    header = {
        "config": cfg.to_dict(),
        "metadata": metadata or {},
        "tensors": [{"name": n, "shape": list(tensors[n].shape)} for n in names],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fp:
        fp.write(MAGIC)
        fp.write(struct.pack("<Q", len(blob)))
        fp.write(blob)
        for n in names:
            fp.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes())


def load_tensors(path: str | Path) -> tuple[Params, ModelConfig, dict]:
    """Read a named-tensor container; validates magic and tensor sizes."""
    path = Path(path)
    with open(path, "rb") as fp:
        magic = fp.read(len(MAGIC))
        if magic != MAGIC:
            raise BadCheckpoint(f"{path}: bad magic {magic!r}")
        (header_len,) = struct.unpack("<Q", fp.read(8))
        try:
            header = json.loads(fp.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadCheckpoint(f"{path}: unreadable header") from exc
        cfg = ModelConfig.from_dict(header["config"])
        tensors: Params = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fp.read(count * 8)
            if len(raw) != count * 8:
                raise BadCheckpoint(f"{path}: tensor {entry['name']} truncated")
            tensors[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return tensors, cfg, header["metadata"]


def save_checkpoint(
    path: str | Path,
    params: Params,
    cfg: ModelConfig,
    metadata: dict | None = None,
) -> None:
    """Write model params + config + metadata (epoch, validation F1, threshold)."""
    save_tensors(path, params, cfg, metadata)


def load_checkpoint(path: str | Path) -> tuple[Params, ModelConfig, dict]:
    """Read a model checkpoint; validates the parameter set against the config."""
    params, cfg, metadata = load_tensors(path)
    check_params(params, cfg)
    return params, cfg, metadata
