"""Binary model checkpoints.

Layout: 8-byte magic, uint32 LE format version, uint32 LE header length,
UTF-8 JSON header {layer_dims, dropout_rate, activation}, then the weight
matrix and bias vector of each layer as row-major little-endian float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointFormatError
from .mlp import MlpModel

MAGIC = b"KIMODEL\x00"
FORMAT_VERSION = 1


def save_model(model: MlpModel, path) -> None:
    path = Path(path)
    header = json.dumps(
        {
            "layer_dims": list(model.layer_dims),
            "dropout_rate": model.dropout_rate,
            "activation": model.activation,
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        f.write(header)
        for w, b in zip(model.weights, model.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_model(path) -> MlpModel:
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) + 8 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointFormatError(f"{path}: not a model checkpoint (bad magic)")
    version, header_len = struct.unpack_from("<II", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {version}")
    offset = len(MAGIC) + 8
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
        dims = tuple(int(d) for d in header["layer_dims"])
        rate = float(header["dropout_rate"])
        activation = str(header["activation"])
    except (ValueError, KeyError, UnicodeDecodeError) as e:
        raise CheckpointFormatError(f"{path}: corrupt header ({e})") from e
    offset += header_len

    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        w_bytes = 8 * d_in * d_out
        b_bytes = 8 * d_out
        if offset + w_bytes + b_bytes > len(raw):
            raise CheckpointFormatError(f"{path}: truncated parameter data")
        weights.append(np.frombuffer(raw, dtype="<f8", count=d_in * d_out, offset=offset).reshape(d_in, d_out).copy())
        offset += w_bytes
        biases.append(np.frombuffer(raw, dtype="<f8", count=d_out, offset=offset).copy())
        offset += b_bytes
    if offset != len(raw):
        raise CheckpointFormatError(f"{path}: trailing bytes after parameter data")
    return MlpModel(dims, weights, biases, rate, activation)
