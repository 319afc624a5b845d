"""Versioned, checksummed binary container for trained models.

Layout::

    b"OFFLCKPT"                 magic
    uint32 LE                   format version
    uint64 LE                   metadata length in bytes
    metadata                    UTF-8 JSON: kind, config, fingerprint, provenance,
                                log and the ordered tensor table (name/dtype/shape)
    tensor bytes                little-endian, in table order
    32 bytes                    SHA-256 of everything above

Encoder tensors are float32. Classical models keep their native float64 /
int64 arrays so that round trips are exact.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from ..classical import MODEL_TYPES
from ..encoder.model import Checkpoint, ClassifierHead, EncoderConfig, EncoderWeights, param_shapes

MAGIC = b"OFFLCKPT"
VERSION = 1
_DTYPES = {"f4": "<f4", "f8": "<f8", "i8": "<i8"}


class CheckpointError(ValueError):
    pass


def _dtype_code(arr: np.ndarray) -> str:
    for code, dt in _DTYPES.items():
        if arr.dtype == np.dtype(dt):
            return code
    raise CheckpointError(f"unsupported tensor dtype {arr.dtype}")


def _pack(meta: dict, tensors: list[tuple[str, np.ndarray]]) -> bytes:
    table = []
    blobs = []
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr)
        code = _dtype_code(arr)
        table.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        blobs.append(arr.astype(_DTYPES[code], copy=False).tobytes())
    meta = dict(meta, tensors=table)
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", VERSION, len(meta_bytes)) + meta_bytes + b"".join(blobs)
    return body + hashlib.sha256(body).digest()


def _unpack(data: bytes, source: str) -> tuple[dict, dict[str, np.ndarray]]:
    head = len(MAGIC) + 12
    if len(data) < head + 32 or not data.startswith(MAGIC):
        raise CheckpointError(f"{source}: not a checkpoint file (bad magic or truncated)")
    version, meta_len = struct.unpack("<IQ", data[len(MAGIC):head])
    if version != VERSION:
        raise CheckpointError(f"{source}: format version {version}, expected {VERSION}")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{source}: checksum mismatch (file corrupted or truncated)")
    try:
        meta = json.loads(body[head:head + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: unreadable metadata ({exc})") from None
    tensors = {}
    offset = head + meta_len
    for entry in meta["tensors"]:
        dt = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64))
        nbytes = count * dt.itemsize
        if offset + nbytes > len(body):
            raise CheckpointError(f"{source}: tensor {entry['name']} runs past end of file")
        arr = np.frombuffer(body, dtype=dt, count=count, offset=offset).reshape(entry["shape"])
        tensors[entry["name"]] = arr.astype(dt.newbyteorder("="), copy=True)
        offset += nbytes
    if offset != len(body):
        raise CheckpointError(f"{source}: {len(body) - offset} trailing bytes")
    return meta, tensors


def _jsonable_log(log):
    return [list(rec) for rec in log]


def checkpoint_bytes(model) -> bytes:
    if isinstance(model, Checkpoint):
        enc = model.encoder
        order = list(param_shapes(enc.config))
        tensors = [(k, enc.params[k].astype(np.float32)) for k in order]
        tensors += [("head.W", model.head.W.astype(np.float32)),
                    ("head.b", model.head.bias.astype(np.float32))]
        meta = {
            "kind": "encoder",
            "config": enc.config.to_dict(),
            "vocab_fingerprint": enc.vocab_fingerprint,
            "provenance": model.provenance,
            "log": _jsonable_log(model.log),
            "history": _jsonable_log(enc.history),
        }
        return _pack(meta, tensors)
    if getattr(model, "kind", None) in MODEL_TYPES:
        meta = {"kind": model.kind, "model": model.meta(),
                "provenance": getattr(model, "provenance", {})}
        return _pack(meta, list(model.tensors().items()))
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def save_checkpoint(model, path) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_bytes(model))
    return path


def checkpoint_from_bytes(data: bytes, source: str = "<bytes>"):
    meta, tensors = _unpack(data, source)
    kind = meta.get("kind")
    if kind == "encoder":
        cfg = EncoderConfig(**meta["config"])
        params = {k: tensors[k] for k in param_shapes(cfg)}
        for k, shape in param_shapes(cfg).items():
            if params[k].shape != shape:
                raise CheckpointError(f"{source}: tensor {k} has shape {params[k].shape}, expected {shape}")
        enc = EncoderWeights(cfg, params, meta["vocab_fingerprint"],
                             [tuple(r) for r in meta.get("history", [])])
        head = ClassifierHead(tensors["head.W"], tensors["head.b"])
        return Checkpoint(enc, head, meta["provenance"], [tuple(r) for r in meta["log"]])
    if kind in MODEL_TYPES:
        model = MODEL_TYPES[kind].from_tensors(tensors, meta["model"])
        model.provenance = meta.get("provenance", {})
        return model
    raise CheckpointError(f"{source}: unknown model kind {kind!r}")


def load_checkpoint(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no checkpoint at {path}")
    return checkpoint_from_bytes(path.read_bytes(), str(path))
