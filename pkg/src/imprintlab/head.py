"""Frozen-head math: logits, top-1 prediction, L2 utilities.

All dot products run in float64 and accumulate strictly in index order
(elementwise product followed by an in-place prefix accumulation), which
makes every logit bit-identical to a scalar left-to-right loop; argmax
ties therefore resolve reproducibly across runs.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteValueError,
    ZeroVectorError,
    ZeroVectorWarning,
)
from .formats import ClassifierHead

# chunk budget for batched logits, in float64 elements (~32 MB)
_CHUNK_ELEMS = 4_000_000


def _as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected length {dim}, got {v.shape[0]}")
    return v


def dot_seq(a: np.ndarray, b: np.ndarray) -> float:
    """Index-order float64 dot product (bit-equal to a scalar loop)."""
    p = a * b
    np.add.accumulate(p, out=p)
    return float(p[-1])


def logits(head: ClassifierHead, x) -> np.ndarray:
    """values[i] = dot(x, w_i) + b_i, accumulated in index order."""
    v = _as_vector(x, head.dim)
    if not np.isfinite(v).all():
        raise NonFiniteValueError("query vector must be finite")
    p = head.weights * v
    np.add.accumulate(p, axis=1, out=p)
    return p[:, -1] + head.bias


def logits_batch(head: ClassifierHead, xs: np.ndarray) -> np.ndarray:
    """Row-per-query logits; identical bits to calling logits() per row."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != head.dim:
        raise DimensionMismatchError(f"expected (Q, {head.dim}) queries, got {xs.shape}")
    q = xs.shape[0]
    out = np.empty((q, head.num_classes), dtype=np.float64)
    step = max(1, _CHUNK_ELEMS // (head.num_classes * head.dim))
    for start in range(0, q, step):
        stop = min(q, start + step)
        p = head.weights[None, :, :] * xs[start:stop, None, :]
        np.add.accumulate(p, axis=2, out=p)
        out[start:stop] = p[:, :, -1] + head.bias
    return out


def predict(head: ClassifierHead, x) -> int:
    """Index of the maximum logit; ties break toward the lowest index."""
    return int(np.argmax(logits(head, x)))


def predict_batch(head: ClassifierHead, xs: np.ndarray) -> np.ndarray:
    return np.argmax(logits_batch(head, xs), axis=1)


def l2_norm(v) -> float:
    v = _as_vector(v)
    return float(np.sqrt(dot_seq(v, v)))


def l2_normalize(v) -> np.ndarray:
    """v / ||v||; a zero vector passes through unchanged with a warning."""
    v = _as_vector(v)
    n = l2_norm(v)
    if n == 0.0:
        warnings.warn("zero vector passed through l2_normalize", ZeroVectorWarning)
        return v.copy()
    return v / n


def cosine_similarity(a, b) -> float:
    a = _as_vector(a)
    b = _as_vector(b, a.shape[0])
    na, nb = l2_norm(a), l2_norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for zero vectors")
    c = dot_seq(a, b) / (na * nb)
    return min(1.0, max(-1.0, c))
