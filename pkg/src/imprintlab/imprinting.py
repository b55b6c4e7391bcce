"""Class-addition kernels for frozen classifier heads.

Two strategies:

  * quantile imprinting ("done"): the new weight row is the query activation
    rank-remapped onto a reference value profile distilled from the existing
    weight matrix, so every statistical property of the new row matches the
    reference.  Existing rows and biases are never touched.

  * normalized linear imprinting ("qi"): the head is first converted to a
    pure cosine form (unit rows, zero bias, unit queries) and the new row is
    the L2-normalized activation itself.

The reference profile is built from the original weight matrix by flattening
all N*M elements, sorting them in non-increasing order, slicing the sorted
sequence into M contiguous rank blocks of N elements, and taking each
block's median.  Its bias is the median of the original bias vector.
Even-length medians use the midpoint of the two central values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateClassNameError,
    EmptyHeadError,
    EmptyShotSetError,
    InvariantViolationError,
    NonFiniteValueError,
    ZeroRowError,
    ZeroVectorError,
)
from .formats import ClassifierHead
from .head import _as_vector, l2_normalize


class ImprintMethod(enum.Enum):
    DONE = "done"
    QI = "qi"

    @classmethod
    def parse(cls, text: str) -> "ImprintMethod":
        try:
            return cls(text.lower())
        except ValueError:
            raise InvariantViolationError(f"unknown imprint method {text!r}")


@dataclass(frozen=True)
class ReferenceProfile:
    """M reference weight values in non-increasing order plus a bias."""

    sorted_weights: np.ndarray  # (M,) float64, non-increasing
    median_bias: float
    source_dims: tuple[int, int]  # (N, M) of the head it was built from

    def __post_init__(self):
        w = np.array(self.sorted_weights, dtype=np.float64, order="C")
        if w.ndim != 1 or w.shape[0] < 1:
            raise InvariantViolationError("sorted_weights must be a non-empty vector")
        if not np.isfinite(w).all() or not np.isfinite(self.median_bias):
            raise InvariantViolationError("profile values must be finite")
        if np.any(np.diff(w) > 0):
            raise InvariantViolationError("sorted_weights must be non-increasing")
        w.flags.writeable = False
        object.__setattr__(self, "sorted_weights", w)

    @property
    def dim(self) -> int:
        return self.sorted_weights.shape[0]


def _median_sorted(block: np.ndarray) -> float:
    """Median of an already-sorted block; even length takes the midpoint."""
    n = block.shape[0]
    mid = n // 2
    if n % 2:
        return float(block[mid])
    return float((block[mid - 1] + block[mid]) / 2.0)


def build_reference_profile(head: ClassifierHead) -> ReferenceProfile:
    """Distill an unmodified head into its per-rank median profile."""
    if head.num_classes < 1:
        raise EmptyHeadError("head has no rows")
    if head.rows_l2_normalized or head.bias_ignored:
        raise InvariantViolationError(
            "reference profile must be built from an unmodified head"
        )
    n, m = head.num_classes, head.dim
    flat = np.sort(head.weights.reshape(-1))[::-1]  # non-increasing
    blocks = flat.reshape(m, n)  # block r holds ranks r*N .. r*N+N-1
    mid = n // 2
    if n % 2:
        sorted_weights = blocks[:, mid].copy()
    else:
        sorted_weights = (blocks[:, mid - 1] + blocks[:, mid]) / 2.0
    median_bias = _median_sorted(np.sort(head.bias)[::-1])
    return ReferenceProfile(
        sorted_weights=sorted_weights,
        median_bias=median_bias,
        source_dims=(n, m),
    )


def quantile_normalize(x, profile: ReferenceProfile) -> np.ndarray:
    """Replace each element of x by the reference value of its rank.

    Rank 0 is the largest element; ties in x resolve by ascending index, so
    the earlier element receives the larger reference value.  The output's
    value multiset equals profile.sorted_weights exactly (values are copied,
    never computed).
    """
    v = _as_vector(x, profile.dim)
    if not np.isfinite(v).all():
        raise NonFiniteValueError("input vector must be finite")
    # stable argsort of -x: descending value, ties by ascending index
    order = np.argsort(-v, kind="stable")
    out = np.empty_like(v)
    out[order] = profile.sorted_weights
    return out


def _append_row(head: ClassifierHead, row, bias_value: float, class_name: str,
                rows_l2: bool, bias_ignored: bool) -> ClassifierHead:
    if class_name in head.class_names:
        raise DuplicateClassNameError(f"class {class_name!r} already present")
    weights = np.vstack([head.weights, np.asarray(row, dtype=np.float64)[None, :]])
    bias = np.concatenate([head.bias, [float(bias_value)]])
    return ClassifierHead(
        weights=weights,
        bias=bias,
        class_names=head.class_names + (class_name,),
        rows_l2_normalized=rows_l2,
        bias_ignored=bias_ignored,
    )


def add_class_done(head: ClassifierHead, x_new, class_name: str,
                   profile: ReferenceProfile | None = None) -> ClassifierHead:
    """Append one quantile-imprinted class; existing parameters are untouched.

    When `profile` is omitted it is built from `head`, which must then be an
    unmodified original head.  For several sequential additions, build the
    profile once from the pristine head and pass it to every call so no
    imprinted row ever contaminates the reference.
    """
    if head.rows_l2_normalized or head.bias_ignored:
        raise InvariantViolationError("quantile imprinting operates on unmodified heads")
    if profile is None:
        profile = build_reference_profile(head)
    if profile.dim != head.dim:
        raise DimensionMismatchError(
            f"profile dim {profile.dim} does not match head dim {head.dim}"
        )
    row = quantile_normalize(x_new, profile)
    return _append_row(head, row, profile.median_bias, class_name,
                       rows_l2=False, bias_ignored=False)


def add_classes_done(head: ClassifierHead, additions) -> ClassifierHead:
    """Imprint many (name, x) pairs against one profile of the given head."""
    profile = build_reference_profile(head)
    out = head
    for class_name, x_new in additions:
        out = add_class_done(out, x_new, class_name, profile=profile)
    return out


def qi_modify_head(head: ClassifierHead) -> ClassifierHead:
    """Convert a head to pure cosine form: unit rows, zero bias, flags set."""
    if head.rows_l2_normalized or head.bias_ignored:
        raise InvariantViolationError("head is already modified")
    norms = np.sqrt((head.weights ** 2).sum(axis=1))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroRowError(f"row {int(zero[0])} is all zeros and cannot be normalized")
    return ClassifierHead(
        weights=head.weights / norms[:, None],
        bias=np.zeros(head.num_classes),
        class_names=head.class_names,
        rows_l2_normalized=True,
        bias_ignored=True,
    )


def add_class_qi(head: ClassifierHead, x_new, class_name: str) -> ClassifierHead:
    """Append one normalized linear-imprinted class to a cosine-form head."""
    if not (head.rows_l2_normalized and head.bias_ignored):
        raise InvariantViolationError(
            "linear imprinting requires a cosine-form head (both flags set)"
        )
    v = _as_vector(x_new, head.dim)
    if float(np.sqrt((v * v).sum())) == 0.0:
        raise ZeroVectorError("cannot imprint a zero activation")
    return _append_row(head, l2_normalize(v), 0.0, class_name,
                       rows_l2=True, bias_ignored=True)


def aggregate_shots(xs, method: ImprintMethod) -> np.ndarray:
    """Collapse K support activations into the single vector to imprint.

    done: arithmetic mean of the raw activations.
    qi:   arithmetic mean of the L2-normalized activations (the add
          operation renormalizes the result).
    """
    vecs = [np.asarray(x, dtype=np.float64) for x in xs]
    if not vecs:
        raise EmptyShotSetError("need at least one support activation")
    dim = vecs[0].shape
    if any(v.shape != dim or v.ndim != 1 for v in vecs):
        raise DimensionMismatchError("support activations must share one dimension")
    if method is ImprintMethod.QI:
        vecs = [l2_normalize(v) for v in vecs]
    acc = np.zeros_like(vecs[0])
    for v in vecs:
        acc += v
    return acc / len(vecs)
