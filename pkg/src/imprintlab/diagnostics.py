"""Weight-space and activation-space analysis.

PCA is computed dependency-free: the symmetric eigenproblem is solved by
cyclic Jacobi rotations (off-diagonal Frobenius norm below 1e-12 of the
matrix scale, at most 100 sweeps) on whichever of the M x M covariance or
R x R Gram matrix is smaller.  Covariance uses 1/(R-1); scalar moments use
population (1/n) normalization.  Component signs follow a fixed convention:
the entry of largest magnitude is made positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadKError,
    DegenerateInputError,
    EmptyInputError,
    TooFewValuesError,
)

_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray          # (k, M), rows orthonormal
    explained_variance: np.ndarray  # (k,), non-increasing
    projections: np.ndarray         # (R, k)
    mean_row: np.ndarray            # (M,)


def _jacobi_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues/vectors of a symmetric matrix via cyclic Jacobi sweeps."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.sqrt((a * a).sum())))
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(0.0, float((a * a).sum() - (np.diag(a) ** 2).sum())))
        if off <= _JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < abs(diff) / 1e300:  # angle underflows double precision
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e154:  # theta**2 would overflow; tan -> 1/(2*theta)
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate columns p, q then rows p, q (vectorized)
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


def _fix_sign(component: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(component)))
    if component[idx] < 0:
        return -component
    return component


def _complete_basis(components: list[np.ndarray], m: int, k: int) -> list[np.ndarray]:
    """Extend an orthonormal set to size k with deterministic basis vectors."""
    out = list(components)
    e = 0
    while len(out) < k and e < m:
        cand = np.zeros(m)
        cand[e] = 1.0
        for c in out:
            cand = cand - float(cand @ c) * c
        norm = float(np.sqrt((cand * cand).sum()))
        if norm > 1e-10:
            out.append(cand / norm)
        e += 1
    if len(out) < k:
        raise DegenerateInputError("could not complete an orthonormal basis")
    return out


def pca(rows: np.ndarray, k: int) -> PcaResult:
    """Top-k principal axes of mean-centered rows."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DegenerateInputError("need at least two rows")
    r, m = x.shape
    if not 1 <= k <= min(r, m):
        raise BadKError(f"k must be in [1, {min(r, m)}], got {k}")
    if np.all(x == x[0]):
        raise DegenerateInputError("all rows identical")
    mean_row = x.mean(axis=0)
    xc = x - mean_row

    if m <= r:
        cov = (xc.T @ xc) / (r - 1)
        eigvals, eigvecs = _jacobi_eigh(cov)
        order = np.argsort(-eigvals, kind="stable")[:k]
        variances = np.maximum(eigvals[order], 0.0)
        comps = [_fix_sign(eigvecs[:, i].copy()) for i in order]
    else:
        gram = (xc @ xc.T) / (r - 1)
        eigvals, eigvecs = _jacobi_eigh(gram)
        order = np.argsort(-eigvals, kind="stable")
        comps = []
        variances = []
        floor = max(1e-12, 1e-12 * max(float(eigvals.max()), 0.0))
        for i in order:
            if len(comps) == k:
                break
            lam = float(eigvals[i])
            if lam <= floor:
                continue
            vec = xc.T @ eigvecs[:, i]
            vec = vec / math.sqrt(lam * (r - 1))
            comps.append(_fix_sign(vec))
            variances.append(lam)
        if len(comps) < k:
            comps = _complete_basis(comps, m, k)
            variances = variances + [0.0] * (k - len(variances))
        variances = np.asarray(variances)

    components = np.vstack(comps)
    explained = np.asarray(variances, dtype=np.float64)
    projections = xc @ components.T
    return PcaResult(
        components=components,
        explained_variance=explained,
        projections=projections,
        mean_row=mean_row,
    )


def histogram(values, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width bins over [min, max]; the max lands in the last bin.

    A constant input degenerates the range; bin width is then forced to 1.
    Returns (edges, counts) with len(edges) == bins + 1.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise EmptyInputError("histogram needs at least one value")
    if bins < 1:
        raise BadKError("bins must be >= 1")
    if not np.isfinite(v).all():
        raise EmptyInputError("histogram values must be finite")
    lo = float(v.min())
    hi = float(v.max())
    if hi == lo:
        hi = lo + float(bins)
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.minimum(((v - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return edges, counts


@dataclass(frozen=True)
class Moments:
    count: int
    mean: float
    variance: float
    skewness: float | None
    excess_kurtosis: float | None

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
        }


def moments(values) -> Moments:
    """Population central moments (1/n); higher moments need spread and data."""
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size < 2:
        raise TooFewValuesError("moments need at least two values")
    mean = float(v.mean())
    d = v - mean
    m2 = float((d * d).mean())
    skew = None
    kurt = None
    if m2 > 0.0:
        if v.size >= 3:
            skew = float((d ** 3).mean() / m2 ** 1.5)
        if v.size >= 4:
            kurt = float((d ** 4).mean() / (m2 * m2) - 3.0)
    return Moments(count=int(v.size), mean=mean, variance=m2,
                   skewness=skew, excess_kurtosis=kurt)


_DECILES = [i / 10.0 for i in range(11)]


@dataclass(frozen=True)
class MismatchReport:
    activation_moments: Moments
    weight_moments: Moments
    deciles: tuple[tuple[float, float, float, float], ...]  # (q, x_val, w_val, gap)

    @property
    def skewness_gap(self) -> float | None:
        a = self.activation_moments.skewness
        w = self.weight_moments.skewness
        if a is None or w is None:
            return None
        return a - w

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "activations": self.activation_moments.to_json_dict(),
            "weights": self.weight_moments.to_json_dict(),
            "skewness_gap": self.skewness_gap,
            "deciles": [
                {"q": q, "activation": xv, "weight": wv, "gap": gap}
                for q, xv, wv, gap in self.deciles
            ],
        }


def distribution_mismatch(x, w_rows) -> MismatchReport:
    """Compare element distributions of activations vs weight rows."""
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    wv = np.asarray(w_rows, dtype=np.float64).reshape(-1)
    if xv.size == 0 or wv.size == 0:
        raise EmptyInputError("mismatch report needs non-empty inputs")
    rows = []
    for q in _DECILES:
        # linear-interpolation quantiles
        a = float(np.quantile(xv, q))
        b = float(np.quantile(wv, q))
        rows.append((q, a, b, a - b))
    return MismatchReport(
        activation_moments=moments(xv),
        weight_moments=moments(wv),
        deciles=tuple(rows),
    )
