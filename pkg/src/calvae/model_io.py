"""Versioned binary model files.

Layout: 8-byte magic, uint32 format version, uint32 header length, a
canonical JSON header (architecture, column names, normalizer parameters,
seed, config echo), the raw float64 little-endian parameter block in fixed
layer order, and a trailing SHA-256 over everything before it. Loading a
file and saving it again reproduces the bytes exactly.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .data import Normalizer
from .errors import ModelChecksumError, ModelIOError, ModelVersionError
from .nn import Activation, DenseLayer
from .vae import LAYER_NAMES, VaeModel

MAGIC = b"CALVAEMF"
FORMAT_VERSION = 1


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _normalizer_dict(norm: Normalizer) -> dict:
    return {
        "columns": list(norm.columns),
        "min": np.asarray(norm.mins).reshape(-1).tolist(),
        "max": np.asarray(norm.maxs).reshape(-1).tolist(),
    }


def _normalizer_from(d: dict) -> Normalizer:
    columns = tuple(d["columns"])
    if len(columns) == 1:
        return Normalizer(columns, np.array(d["min"][0]), np.array(d["max"][0]))
    return Normalizer(columns, np.array(d["min"], dtype=np.float64),
                      np.array(d["max"], dtype=np.float64))


def serialize_model(model: VaeModel, input_normalizer: Normalizer,
                    target_normalizer: Normalizer, target_column: str,
                    seed: int, config_echo: dict) -> bytes:
    header = {
        "layers": [
            {
                "name": name,
                "activation": layer.activation.value,
                "shape": [layer.out_dim, layer.in_dim],
            }
            for name, layer in model.layers().items()
        ],
        "normalizer_inputs": _normalizer_dict(input_normalizer),
        "normalizer_target": _normalizer_dict(target_normalizer),
        "target_column": target_column,
        "seed": seed,
        "config": config_echo,
    }
    header_bytes = _canonical_json(header)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", FORMAT_VERSION, len(header_bytes))
    blob += header_bytes
    for layer in model.layers().values():
        blob += layer.weights.astype("<f8").tobytes(order="C")
        blob += layer.biases.astype("<f8").tobytes(order="C")
    blob += hashlib.sha256(blob).digest()
    return bytes(blob)


def save_model(path, model: VaeModel, input_normalizer: Normalizer,
               target_normalizer: Normalizer, target_column: str, seed: int,
               config_echo: dict) -> Path:
    path = Path(path)
    data = serialize_model(model, input_normalizer, target_normalizer,
                           target_column, seed, config_echo)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    return path


def deserialize_model(data: bytes):
    """Inverse of serialize_model.

    Returns (model, input_normalizer, target_normalizer, header dict).
    """
    digest_size = hashlib.sha256().digest_size
    if len(data) < len(MAGIC) + 8 + digest_size:
        raise ModelChecksumError("file truncated")
    if data[:len(MAGIC)] != MAGIC:
        raise ModelIOError("not a model file (bad magic)")
    body, digest = data[:-digest_size], data[-digest_size:]
    if hashlib.sha256(body).digest() != digest:
        raise ModelChecksumError("checksum mismatch: file corrupted or truncated")
    version, header_len = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"format version {version} unsupported (expected {FORMAT_VERSION})")
    offset = len(MAGIC) + 8
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    except ValueError as exc:
        raise ModelIOError(f"bad header: {exc}") from None
    offset += header_len

    if [entry["name"] for entry in header["layers"]] != list(LAYER_NAMES):
        raise ModelIOError("unexpected layer list in header")
    layers = {}
    for entry in header["layers"]:
        out_dim, in_dim = entry["shape"]
        n_w, n_b = out_dim * in_dim, out_dim
        need = (n_w + n_b) * 8
        if offset + need > len(body):
            raise ModelChecksumError("parameter block truncated")
        w = np.frombuffer(data, dtype="<f8", count=n_w,
                          offset=offset).reshape(out_dim, in_dim).copy()
        offset += n_w * 8
        b = np.frombuffer(data, dtype="<f8", count=n_b, offset=offset).copy()
        offset += n_b * 8
        layers[entry["name"]] = DenseLayer(w, b, Activation(entry["activation"]))
    if offset != len(body):
        raise ModelIOError("trailing bytes after parameter block")

    model = VaeModel(**layers)
    return (model,
            _normalizer_from(header["normalizer_inputs"]),
            _normalizer_from(header["normalizer_target"]),
            header)


def load_model(path):
    return deserialize_model(Path(path).read_bytes())
