"""Binary checkpoint format for trained models.

Layout: 8-byte magic ``LEVEMB01``, an 8-byte little-endian length, a
UTF-8 JSON header (format version, architecture, training metadata, and
a named array manifest with shapes and byte offsets), then the raw
little-endian float32 arrays in manifest order. The header is canonical
JSON (sorted keys), so saving a freshly loaded checkpoint reproduces the
original file byte for byte. Besides the learned parameters, the batch
norm running statistics and the Adam moment accumulators are stored, so
a resumed training run continues exactly where it stopped.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import DataError
from .seeding import substream
from .siamese import ArchitectureSpec, EmbeddingModel

MAGIC = b"LEVEMB01"
FORMAT_VERSION = 1


def _named_arrays(model: EmbeddingModel) -> list[tuple[str, np.ndarray]]:
    arrays: list[tuple[str, np.ndarray]] = []
    for p in model.parameters():
        arrays.append((p.name, p.value))
    arrays.append(("bn.running_mean", model.bn.running_mean))
    arrays.append(("bn.running_var", model.bn.running_var))
    for p in model.parameters():
        arrays.append((p.name + ".adam_m", p.m))
        arrays.append((p.name + ".adam_v", p.v))
    return arrays


def save_checkpoint(path, model: EmbeddingModel, metadata: dict) -> None:
    arrays = _named_arrays(model)
    manifest = []
    offset = 0
    blobs = []
    for name, arr in arrays:
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(np.shape(arr)), "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = {
        "format_version": FORMAT_VERSION,
        "arch": {
            "kind": model.spec.kind,
            "embedding_dim": model.spec.embedding_dim,
            "input_len": model.spec.input_len,
            "alphabet_size": model.spec.alphabet_size,
        },
        "adam_t": model.adam_t,
        "metadata": metadata,
        "manifest": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path) -> tuple[EmbeddingModel, dict]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise DataError(f"{path}: not a checkpoint (magic {magic!r})")
        (header_len,) = struct.unpack("<Q", f.read(8))
        try:
            header = json.loads(f.read(header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: corrupt checkpoint header: {exc}") from None
        if header.get("format_version") != FORMAT_VERSION:
            raise DataError(
                f"{path}: checkpoint format version {header.get('format_version')} "
                f"not supported (expected {FORMAT_VERSION})"
            )
        data = f.read()
    spec = ArchitectureSpec(**header["arch"])
    model = EmbeddingModel(spec, substream(0, "checkpoint-init"))
    model.adam_t = int(header["adam_t"])
    targets = dict(_named_arrays(model))
    manifest = header["manifest"]
    expected = sum(int(np.prod(e["shape"])) if e["shape"] else 1 for e in manifest) * 4
    if len(data) != expected:
        raise DataError(f"{path}: payload is {len(data)} bytes, manifest expects {expected}")
    if set(targets) != {e["name"] for e in manifest}:
        raise DataError(f"{path}: checkpoint arrays do not match the declared architecture")
    for entry in manifest:
        name = entry["name"]
        shape = tuple(entry["shape"])
        target = targets[name]
        if tuple(target.shape) != shape:
            raise DataError(
                f"{path}: array {name} has shape {shape}, architecture expects {tuple(target.shape)}"
            )
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=start).reshape(shape)
        target[...] = arr
    return model, header["metadata"]
