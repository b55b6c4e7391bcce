"""EMB1/HED1 writers, implemented independently against docs/formats.md.

This module deliberately does not import the consumer toolkit: the byte
layout is the contract, and these writers are the producer side of it.
Little-endian throughout; all floats stored as IEEE-754 binary32.
"""

from __future__ import annotations

import struct

import numpy as np


class WireError(ValueError):
    pass


def _names_blob(names) -> bytes:
    out = bytearray()
    seen = set()
    for name in names:
        if not name or name in seen:
            raise WireError(f"class names must be non-empty and unique: {name!r}")
        seen.add(name)
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise WireError("class name longer than 65535 bytes")
        out += struct.pack("<H", len(raw))
        out += raw
    return bytes(out)


def _f32(a, shape_hint: str) -> np.ndarray:
    q = np.ascontiguousarray(a, dtype="<f4")
    if not np.isfinite(q).all():
        raise WireError(f"{shape_hint} contains non-finite values after float32 cast")
    return q


def emb1_bytes(rows, labels, class_names) -> bytes:
    rows = _f32(rows, "embedding matrix")
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise WireError("rows must be a non-empty 2-D matrix")
    labels = np.ascontiguousarray(labels, dtype="<u4")
    names = list(class_names)
    if labels.shape != (rows.shape[0],):
        raise WireError("one label per row required")
    if labels.size and int(labels.max()) >= len(names):
        raise WireError("label out of range")
    header = b"EMB1" + struct.pack(
        "<IIII", 1, rows.shape[0], rows.shape[1], len(names)
    )
    return header + rows.tobytes() + labels.tobytes() + _names_blob(names)


def hed1_bytes(weights, bias, class_names, rows_l2_normalized=False,
               bias_ignored=False) -> bytes:
    weights = _f32(weights, "weight matrix")
    if weights.ndim != 2 or weights.shape[0] < 1 or weights.shape[1] < 1:
        raise WireError("weights must be a non-empty 2-D matrix")
    bias = _f32(bias, "bias vector")
    names = list(class_names)
    if bias.shape != (weights.shape[0],) or len(names) != weights.shape[0]:
        raise WireError("need one bias entry and one name per row")
    flags = (1 if rows_l2_normalized else 0) | (2 if bias_ignored else 0)
    header = b"HED1" + struct.pack(
        "<IIII", 1, weights.shape[0], weights.shape[1], flags
    )
    return header + weights.tobytes() + bias.tobytes() + _names_blob(names)
