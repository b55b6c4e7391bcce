"""Binary containers for embedding sets and classifier-head snapshots.

Two little-endian formats (documented byte-for-byte in docs/formats.md):

  EMB1: magic "EMB1" | u32 version=1 | u32 S | u32 M | u32 C
        | S*M float32 row-major | S u32 labels
        | C names, each u16 byte-length + UTF-8 bytes

  HED1: magic "HED1" | u32 version=1 | u32 N | u32 M | u32 flags
        (bit0 = rows_l2_normalized, bit1 = bias_ignored)
        | N*M float32 row-major weights | N float32 bias
        | N names, each u16 byte-length + UTF-8 bytes

Values are stored as float32; in memory everything is held (exactly) in
float64 and re-quantized to float32 only when written.  Parsing is total:
any byte stream either yields a validated object or raises a typed error,
and a well-formed stream round-trips bit-exactly.

A CSV fallback exists for tiny hand-written embedding fixtures: header
``label,x0,...``; each data row is a class name followed by M decimal
floats.  Heads have flags and biases that do not fit that shape and stay
binary-only.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    DuplicateClassNameError,
    InvariantViolationError,
    LabelOutOfRangeError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

_EMB_MAGIC = b"EMB1"
_HED_MAGIC = b"HED1"
_VERSION = 1

_FLAG_ROWS_L2 = 0x1
_FLAG_BIAS_IGNORED = 0x2
_KNOWN_FLAGS = _FLAG_ROWS_L2 | _FLAG_BIAS_IGNORED

ROW_NORM_TOL = 1e-5


def _freeze(a: np.ndarray) -> np.ndarray:
    # always copy: freezing an aliased caller array would be a side effect,
    # and holding one unfrozen would break value semantics
    a = np.array(a, dtype=np.float64, order="C")
    a.flags.writeable = False
    return a


def _check_names(names) -> tuple[str, ...]:
    names = tuple(names)
    for name in names:
        if not isinstance(name, str) or not name:
            raise InvariantViolationError("class names must be non-empty strings")
    if len(set(names)) != len(names):
        raise DuplicateClassNameError("class names must be unique")
    return names


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """S labeled feature vectors of dimension M over C named classes."""

    rows: np.ndarray      # (S, M) float64
    labels: np.ndarray    # (S,) int64, values in [0, C)
    class_names: tuple[str, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise InvariantViolationError("rows must be a non-empty 2-D array")
        if not np.isfinite(rows).all():
            raise NonFiniteValueError("embedding values must be finite")
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (rows.shape[0],):
            raise InvariantViolationError("one label per row required")
        names = _check_names(self.class_names)
        if len(names) < 1:
            raise InvariantViolationError("at least one class name required")
        if labels.min() < 0 or labels.max() >= len(names):
            raise LabelOutOfRangeError("labels must lie in [0, num classes)")
        object.__setattr__(self, "rows", _freeze(rows))
        labels = np.array(labels, dtype=np.int64, order="C")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", names)

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True, eq=False)
class ClassifierHead:
    """Frozen dense classification head: weight rows, bias, names, flags."""

    weights: np.ndarray   # (N, M) float64
    bias: np.ndarray      # (N,) float64
    class_names: tuple[str, ...]
    rows_l2_normalized: bool = False
    bias_ignored: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise InvariantViolationError("weights must be a non-empty 2-D array")
        if not np.isfinite(w).all():
            raise NonFiniteValueError("weights must be finite")
        b = np.asarray(self.bias, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise InvariantViolationError("one bias entry per row required")
        if not np.isfinite(b).all():
            raise NonFiniteValueError("bias must be finite")
        names = _check_names(self.class_names)
        if len(names) != w.shape[0]:
            raise InvariantViolationError("one class name per row required")
        if self.rows_l2_normalized:
            norms = np.sqrt((w.astype(np.float64) ** 2).sum(axis=1))
            if np.abs(norms - 1.0).max() > ROW_NORM_TOL:
                raise InvariantViolationError(
                    "rows_l2_normalized set but a row norm deviates from 1"
                )
        if self.bias_ignored and np.any(b != 0.0):
            raise InvariantViolationError("bias_ignored set but bias is non-zero")
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "bias", _freeze(b))
        object.__setattr__(self, "class_names", names)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def is_qi_modified(self) -> bool:
        return self.rows_l2_normalized and self.bias_ignored


class _Cursor:
    """Bounded reader over an immutable buffer; all reads are length-checked."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedPayloadError(
                f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32_array(self, count: int) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4", count=count)

    def u32_array(self, count: int) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<u4", count=count)

    def names(self, count: int) -> list[str]:
        out = []
        for _ in range(count):
            length = self.u16()
            raw = self.take(length)
            try:
                out.append(raw.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise InvariantViolationError(f"class name is not valid UTF-8: {exc}")
        return out

    def finish(self):
        if self.pos != len(self.data):
            raise InvariantViolationError(
                f"{len(self.data) - self.pos} unexpected trailing bytes"
            )


def _header(cur: _Cursor, magic: bytes):
    got = cur.take(4)
    if got != magic:
        raise BadMagicError(f"expected magic {magic!r}, found {got!r}")
    version = cur.u32()
    if version != _VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}")


def read_embeddings(data: bytes) -> EmbeddingSet:
    cur = _Cursor(bytes(data))
    _header(cur, _EMB_MAGIC)
    s, m, c = cur.u32(), cur.u32(), cur.u32()
    if s < 1 or m < 1 or c < 1:
        raise InvariantViolationError(f"S, M, C must all be >= 1 (got {s}, {m}, {c})")
    values = cur.f32_array(s * m)
    if not np.isfinite(values).all():
        raise NonFiniteValueError("embedding payload contains NaN or Inf")
    labels = cur.u32_array(s).astype(np.int64)
    names = cur.names(c)
    cur.finish()
    rows = values.astype(np.float64).reshape(s, m)
    return EmbeddingSet(rows=rows, labels=labels, class_names=tuple(names))


def write_embeddings(emb: EmbeddingSet) -> bytes:
    out = io.BytesIO()
    out.write(_EMB_MAGIC)
    out.write(struct.pack("<IIII", _VERSION, emb.num_rows, emb.dim, emb.num_classes))
    out.write(_quantize(emb.rows).tobytes())
    out.write(emb.labels.astype("<u4").tobytes())
    _write_names(out, emb.class_names)
    return out.getvalue()


def read_head(data: bytes) -> ClassifierHead:
    cur = _Cursor(bytes(data))
    _header(cur, _HED_MAGIC)
    n, m, flags = cur.u32(), cur.u32(), cur.u32()
    if n < 1 or m < 1:
        raise InvariantViolationError(f"N, M must be >= 1 (got {n}, {m})")
    if flags & ~_KNOWN_FLAGS:
        raise InvariantViolationError(f"unknown flag bits set: {flags:#x}")
    weights = cur.f32_array(n * m)
    if not np.isfinite(weights).all():
        raise NonFiniteValueError("weight payload contains NaN or Inf")
    bias = cur.f32_array(n)
    if not np.isfinite(bias).all():
        raise NonFiniteValueError("bias payload contains NaN or Inf")
    names = cur.names(n)
    cur.finish()
    return ClassifierHead(
        weights=weights.astype(np.float64).reshape(n, m),
        bias=bias.astype(np.float64),
        class_names=tuple(names),
        rows_l2_normalized=bool(flags & _FLAG_ROWS_L2),
        bias_ignored=bool(flags & _FLAG_BIAS_IGNORED),
    )


def write_head(head: ClassifierHead) -> bytes:
    flags = 0
    if head.rows_l2_normalized:
        flags |= _FLAG_ROWS_L2
    if head.bias_ignored:
        flags |= _FLAG_BIAS_IGNORED
    out = io.BytesIO()
    out.write(_HED_MAGIC)
    out.write(struct.pack("<IIII", _VERSION, head.num_classes, head.dim, flags))
    out.write(_quantize(head.weights).tobytes())
    out.write(_quantize(head.bias).tobytes())
    _write_names(out, head.class_names)
    return out.getvalue()


def _quantize(a: np.ndarray) -> np.ndarray:
    q = np.ascontiguousarray(a, dtype="<f4")
    if not np.isfinite(q).all():
        raise NonFiniteValueError("value overflows float32 on write")
    return q


def _write_names(out: io.BytesIO, names):
    for name in names:
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise InvariantViolationError("class name longer than 65535 bytes")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)


# --- CSV fallback (embedding sets only) --------------------------------------

def read_embeddings_csv(text: str) -> EmbeddingSet:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if len(rows) < 2:
        raise TruncatedPayloadError("CSV needs a header row and at least one data row")
    header = rows[0]
    if not header or header[0] != "label":
        raise BadMagicError("CSV header must start with 'label'")
    m = len(header) - 1
    if m < 1:
        raise InvariantViolationError("CSV needs at least one feature column")
    names: list[str] = []
    index: dict[str, int] = {}
    labels = []
    data = np.empty((len(rows) - 1, m), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        if len(row) != m + 1:
            raise TruncatedPayloadError(f"CSV row {i + 2} has {len(row)} cells, expected {m + 1}")
        name = row[0]
        if name not in index:
            index[name] = len(names)
            names.append(name)
        labels.append(index[name])
        try:
            parsed = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise NonFiniteValueError(f"CSV row {i + 2}: {exc}")
        # quantize like the binary path so both parse to identical objects
        data[i] = np.asarray(parsed, dtype=np.float64).astype(np.float32)
    if not np.isfinite(data).all():
        raise NonFiniteValueError("CSV contains non-finite values")
    return EmbeddingSet(rows=data, labels=np.asarray(labels), class_names=tuple(names))


def write_embeddings_csv(emb: EmbeddingSet) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["label"] + [f"x{i}" for i in range(emb.dim)])
    q = _quantize(emb.rows)
    for i in range(emb.num_rows):
        name = emb.class_names[int(emb.labels[i])]
        writer.writerow([name] + [repr(v) for v in q[i].tolist()])
    return out.getvalue()
