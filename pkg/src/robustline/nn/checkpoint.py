"""Model checkpoints: the RLMD binary container.

Layout: magic ``RLMD``, a length-prefixed JSON ModelSpec, then each
parameter tensor as (name, shape, float32 payload). Parameters are stored
float32; save -> load -> save round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import DataError
from .families import Model, ModelSpec, build_model

MAGIC = b"RLMD"


def save_model(model: Model, path) -> None:
    named = model.named_params()
    spec_blob = json.dumps(model.spec.to_dict(), sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(spec_blob)))
        f.write(spec_blob)
        f.write(struct.pack("<I", len(named)))
        for name, tensor in named:
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", tensor.ndim))
            for dim in tensor.shape:
                f.write(struct.pack("<I", dim))
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a model checkpoint")
    pos = 4
    (spec_len,) = struct.unpack_from("<I", data, pos)
    pos += 4
    try:
        spec = ModelSpec(**json.loads(data[pos : pos + spec_len].decode("utf-8")))
    except (json.JSONDecodeError, TypeError) as exc:
        raise DataError(f"{path}: bad spec block ({exc})") from None
    pos += spec_len
    (n_tensors,) = struct.unpack_from("<I", data, pos)
    pos += 4

    model = build_model(spec)
    named = model.named_params()
    if len(named) != n_tensors:
        raise DataError(
            f"{path}: has {n_tensors} tensors, architecture expects {len(named)}"
        )
    for name, param in named:
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        stored_name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        if stored_name != name:
            raise DataError(f"{path}: tensor {stored_name!r}, expected {name!r}")
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        if shape != param.shape:
            raise DataError(
                f"{path}: tensor {name} has shape {shape}, expected {param.shape}"
            )
        count = int(np.prod(shape)) if ndim else 1
        values = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
        pos += 4 * count
        param[...] = values.reshape(shape).astype(np.float64)
    if pos != len(data):
        raise DataError(f"{path}: {len(data) - pos} trailing bytes")
    return model
