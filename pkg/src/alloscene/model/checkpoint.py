"""Versioned binary checkpoints.

Layout: magic ``ASCK``, little-endian uint32 version, uint32 header
length, a JSON header (config echo plus an ordered list of parameter
names and shapes), then the raw parameter data as 32-bit little-endian
floats in header order. Loading validates every name and shape against
a fresh initialization of the echoed config and rejects mismatches.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .. import tensor as T
from .config import ModelConfig
from .network import ModelState

MAGIC = b"ASCK"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(state: ModelState, path: str):
    """Atomic write (temp file + rename)."""
    header = {
        "config": state.config.to_json(),
        "params": [{"name": k, "shape": list(v.shape)} for k, v in state.params.items()],
    }
    blob = json.dumps(header).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(blob)))
        f.write(blob)
        for v in state.params.values():
            f.write(np.ascontiguousarray(v.numpy(), dtype="<f4").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path: str) -> ModelState:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(f.read(hlen).decode("utf-8"))
        config = ModelConfig.from_json(header["config"])
        expected = ModelState.initialize(config, seed=0).params
        names = [p["name"] for p in header["params"]]
        if names != list(expected.keys()):
            missing = set(expected) - set(names)
            extra = set(names) - set(expected)
            raise CheckpointError(
                f"{path}: parameter names do not match the config "
                f"(missing={sorted(missing)}, unexpected={sorted(extra)})")
        dtype = np.float32 if config.dtype == "float32" else np.float64
        params = {}
        for p in header["params"]:
            shape = tuple(p["shape"])
            if shape != expected[p["name"]].shape:
                raise CheckpointError(
                    f"{path}: parameter {p['name']} has shape {shape}, "
                    f"config expects {expected[p['name']].shape}")
            n = int(np.prod(shape)) if shape else 1
            raw = f.read(4 * n)
            if len(raw) != 4 * n:
                raise CheckpointError(f"{path}: truncated data for {p['name']}")
            arr = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(dtype)
            params[p["name"]] = T.Tensor(arr.copy(), requires_grad=True)
    return ModelState(config, params)
