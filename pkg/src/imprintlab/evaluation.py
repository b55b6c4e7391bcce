"""Accuracy / interference measurement and the seeded episode benchmark.

Episode protocol (all randomness from the documented PRNG):
  * episode e uses the stream seeded from mix64(spec.seed XOR e);
  * the stream first samples `ways` distinct pool classes by partial
    Fisher-Yates over the sorted class indices, then for each sampled class
    (in selection order) samples shots + queries_per_class distinct row
    positions by partial Fisher-Yates over that class's sorted row indices;
    the first `shots` are support, the rest are queries;
  * the episode head is built from scratch (only the sampled classes) when
    no base head is given, otherwise the sampled classes are imprinted on
    top of the base head;
  * from-scratch quantile episodes have no original head to supply a
    reference profile, so the profile is distilled from the ways raw
    support centroids themselves (the bias reference is then 0).

Identical (pool, base head, spec) always reproduce bit-identical results.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InsufficientClassesError,
    InsufficientSamplesError,
    InvariantViolationError,
    UnmappableLabelError,
    ZeroVectorError,
    ZeroVectorWarning,
)
from .formats import ClassifierHead, EmbeddingSet
from .head import predict_batch
from .imprinting import (
    ImprintMethod,
    add_class_done,
    add_class_qi,
    aggregate_shots,
    build_reference_profile,
    qi_modify_head,
    quantile_normalize,
)
from .rng import substream


@dataclass(frozen=True)
class EvalReport:
    """Top-1 accuracy bookkeeping for one head over one query set."""

    per_class_correct: dict[int, int]
    per_class_total: dict[int, int]
    new_class_top1_accuracy: dict[int, float]
    original_top1_accuracy: float | None
    interference_fraction: float | None
    confusion: dict[int, dict[int, int]]
    num_queries: int
    num_correct: int

    @property
    def accuracy(self) -> float:
        return self.num_correct / self.num_queries

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "num_queries": self.num_queries,
            "num_correct": self.num_correct,
            "accuracy": self.accuracy,
            "original_top1_accuracy": self.original_top1_accuracy,
            "interference_fraction": self.interference_fraction,
            "new_class_top1_accuracy": {
                str(k): v for k, v in sorted(self.new_class_top1_accuracy.items())
            },
            "per_class": {
                str(k): {
                    "correct": self.per_class_correct[k],
                    "total": self.per_class_total[k],
                }
                for k in sorted(self.per_class_total)
            },
            "confusion": {
                str(t): {str(p): c for p, c in sorted(row.items())}
                for t, row in sorted(self.confusion.items())
            },
        }


def _normalized_queries(head: ClassifierHead, queries: EmbeddingSet) -> np.ndarray:
    xs = queries.rows
    if not head.is_qi_modified:
        return xs
    norms = np.sqrt((xs ** 2).sum(axis=1))
    if np.any(norms == 0.0):
        warnings.warn("zero query vectors pass through unnormalized", ZeroVectorWarning)
    safe = np.where(norms == 0.0, 1.0, norms)
    return xs / safe[:, None]


def evaluate(head: ClassifierHead, queries: EmbeddingSet,
             new_class_indices=()) -> EvalReport:
    """Score top-1 predictions; split statistics by original vs new classes."""
    if queries.dim != head.dim:
        raise DimensionMismatchError(
            f"queries dim {queries.dim} does not match head dim {head.dim}"
        )
    new_set = set(int(i) for i in new_class_indices)
    for i in new_set:
        if not 0 <= i < head.num_classes:
            raise InvariantViolationError(f"new class index {i} out of range")
    name_to_idx = {name: i for i, name in enumerate(head.class_names)}
    try:
        true_idx = np.asarray(
            [name_to_idx[queries.class_names[l]] for l in queries.labels.tolist()],
            dtype=np.int64,
        )
    except KeyError as exc:
        raise UnmappableLabelError(f"query class {exc.args[0]!r} not present in head")

    preds = predict_batch(head, _normalized_queries(head, queries))

    per_class_correct: dict[int, int] = {}
    per_class_total: dict[int, int] = {}
    confusion: dict[int, dict[int, int]] = {}
    orig_total = orig_correct = orig_hijacked = 0
    new_totals: dict[int, int] = {}
    new_correct: dict[int, int] = {}
    for t, p in zip(true_idx.tolist(), preds.tolist()):
        per_class_total[t] = per_class_total.get(t, 0) + 1
        row = confusion.setdefault(t, {})
        row[p] = row.get(p, 0) + 1
        hit = t == p
        if hit:
            per_class_correct[t] = per_class_correct.get(t, 0) + 1
        else:
            per_class_correct.setdefault(t, 0)
        if t in new_set:
            new_totals[t] = new_totals.get(t, 0) + 1
            new_correct[t] = new_correct.get(t, 0) + int(hit)
        else:
            orig_total += 1
            orig_correct += int(hit)
            orig_hijacked += int(p in new_set)

    return EvalReport(
        per_class_correct=per_class_correct,
        per_class_total=per_class_total,
        new_class_top1_accuracy={
            k: new_correct[k] / new_totals[k] for k in new_totals
        },
        original_top1_accuracy=(orig_correct / orig_total) if orig_total else None,
        interference_fraction=(orig_hijacked / orig_total) if orig_total else None,
        confusion=confusion,
        num_queries=queries.num_rows,
        num_correct=sum(per_class_correct.values()),
    )


@dataclass(frozen=True)
class EpisodeSpec:
    """Seeded N-way K-shot benchmark configuration."""

    ways: int
    shots: int
    queries_per_class: int
    episodes: int
    seed: int
    method: ImprintMethod

    def __post_init__(self):
        if self.ways < 2:
            raise InvariantViolationError("ways must be >= 2")
        if self.shots < 1 or self.queries_per_class < 1 or self.episodes < 1:
            raise InvariantViolationError("shots, queries and episodes must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "ways": self.ways,
            "shots": self.shots,
            "queries_per_class": self.queries_per_class,
            "episodes": self.episodes,
            "seed": self.seed,
            "method": self.method.value,
        }


@dataclass(frozen=True)
class EpisodeSample:
    class_ids: tuple[int, ...]
    support_rows: tuple[tuple[int, ...], ...]  # aligned with class_ids
    query_rows: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class EpisodeRecord:
    index: int
    class_ids: tuple[int, ...]
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


@dataclass(frozen=True)
class EpisodeSummary:
    spec: EpisodeSpec
    from_scratch: bool
    mean_accuracy: float
    std_error: float
    records: tuple[EpisodeRecord, ...]

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "spec": self.spec.to_json_dict(),
            "from_scratch": self.from_scratch,
            "mean_accuracy": self.mean_accuracy,
            "std_error": self.std_error,
            "episodes": [
                {
                    "index": r.index,
                    "classes": list(r.class_ids),
                    "correct": r.correct,
                    "total": r.total,
                    "accuracy": r.accuracy,
                }
                for r in self.records
            ],
        }


def sample_episode(pool: EmbeddingSet, spec: EpisodeSpec,
                   episode_index: int) -> EpisodeSample:
    """Deterministic class/support/query draw for one episode."""
    if pool.num_classes < spec.ways:
        raise InsufficientClassesError(
            f"pool has {pool.num_classes} classes, need {spec.ways}"
        )
    stream = substream(spec.seed, episode_index)
    class_ids = stream.sample_without_replacement(pool.num_classes, spec.ways)
    need = spec.shots + spec.queries_per_class
    support_rows = []
    query_rows = []
    for c in class_ids:
        rows_of_c = np.flatnonzero(pool.labels == c)
        if rows_of_c.shape[0] < need:
            raise InsufficientSamplesError(
                f"class {pool.class_names[c]!r} has {rows_of_c.shape[0]} rows, "
                f"needs {need}"
            )
        picked = stream.sample_without_replacement(rows_of_c.shape[0], need)
        chosen = rows_of_c[picked]
        support_rows.append(tuple(int(i) for i in chosen[:spec.shots]))
        query_rows.append(tuple(int(i) for i in chosen[spec.shots:]))
    return EpisodeSample(
        class_ids=tuple(class_ids),
        support_rows=tuple(support_rows),
        query_rows=tuple(query_rows),
    )


def _scratch_head(pool: EmbeddingSet, sample: EpisodeSample,
                  method: ImprintMethod) -> ClassifierHead:
    names = tuple(pool.class_names[c] for c in sample.class_ids)
    centroids = [
        aggregate_shots([pool.rows[i] for i in rows], method)
        for rows in sample.support_rows
    ]
    if method is ImprintMethod.QI:
        rows = []
        for c in centroids:
            if float((c * c).sum()) == 0.0:
                raise ZeroVectorError("zero support centroid cannot be normalized")
            rows.append(c / np.sqrt((c * c).sum()))
        return ClassifierHead(
            weights=np.vstack(rows),
            bias=np.zeros(len(rows)),
            class_names=names,
            rows_l2_normalized=True,
            bias_ignored=True,
        )
    raw = ClassifierHead(
        weights=np.vstack(centroids),
        bias=np.zeros(len(centroids)),
        class_names=names,
    )
    profile = build_reference_profile(raw)
    rows = [quantile_normalize(c, profile) for c in centroids]
    return ClassifierHead(
        weights=np.vstack(rows),
        bias=np.full(len(rows), profile.median_bias),
        class_names=names,
    )


def _imprinted_head(pool: EmbeddingSet, sample: EpisodeSample,
                    method: ImprintMethod,
                    base_head: ClassifierHead) -> ClassifierHead:
    centroids = [
        aggregate_shots([pool.rows[i] for i in rows], method)
        for rows in sample.support_rows
    ]
    names = [pool.class_names[c] for c in sample.class_ids]
    if method is ImprintMethod.QI:
        head = base_head if base_head.is_qi_modified else qi_modify_head(base_head)
        for name, c in zip(names, centroids):
            head = add_class_qi(head, c, name)
        return head
    profile = build_reference_profile(base_head)
    head = base_head
    for name, c in zip(names, centroids):
        head = add_class_done(head, c, name, profile=profile)
    return head


def run_episode(pool: EmbeddingSet, base_head: ClassifierHead | None,
                spec: EpisodeSpec, episode_index: int) -> EpisodeRecord:
    sample = sample_episode(pool, spec, episode_index)
    if base_head is None:
        head = _scratch_head(pool, sample, spec.method)
    else:
        if pool.dim != base_head.dim:
            raise DimensionMismatchError(
                f"pool dim {pool.dim} does not match base head dim {base_head.dim}"
            )
        head = _imprinted_head(pool, sample, spec.method, base_head)
    query_idx = np.asarray([i for rows in sample.query_rows for i in rows])
    queries = EmbeddingSet(
        rows=pool.rows[query_idx],
        labels=pool.labels[query_idx],
        class_names=pool.class_names,
    )
    report = evaluate(head, queries)
    return EpisodeRecord(
        index=episode_index,
        class_ids=sample.class_ids,
        correct=report.num_correct,
        total=report.num_queries,
    )


def run_episodes(pool: EmbeddingSet, base_head: ClassifierHead | None,
                 spec: EpisodeSpec) -> EpisodeSummary:
    """Run E independent episodes and aggregate mean accuracy and its SE."""
    records = tuple(
        run_episode(pool, base_head, spec, e) for e in range(spec.episodes)
    )
    accs = np.asarray([r.accuracy for r in records], dtype=np.float64)
    mean = float(accs.mean())
    if len(accs) > 1:
        sd = float(accs.std(ddof=1))
        se = sd / math.sqrt(len(accs))
    else:
        se = 0.0
    return EpisodeSummary(
        spec=spec,
        from_scratch=base_head is None,
        mean_accuracy=mean,
        std_error=se,
        records=records,
    )


def accuracy_vs_shots(pool: EmbeddingSet, spec_template: EpisodeSpec,
                      shot_list, base_head: ClassifierHead | None = None):
    """run_episodes once per K in shot_list, sharing the template's seed."""
    table = []
    for shots in shot_list:
        spec = EpisodeSpec(
            ways=spec_template.ways,
            shots=int(shots),
            queries_per_class=spec_template.queries_per_class,
            episodes=spec_template.episodes,
            seed=spec_template.seed,
            method=spec_template.method,
        )
        summary = run_episodes(pool, base_head, spec)
        table.append({
            "shots": int(shots),
            "mean_accuracy": summary.mean_accuracy,
            "std_error": summary.std_error,
        })
    return table
