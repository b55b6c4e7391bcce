"""Synthetic embedding/head generation for desk-scale phenomenon studies.

The generator models the regime that drives linear-imprinting interference:
trained weight rows are bell-shaped while post-rectification activations
are right-tailed with a large mass of exact zeros.  Class c's weight row is
its prototype; a sample of class c is

    cnn-like:  x = max(0, SIGNAL * prototype_c + spread * noise)
    vit-like:  x =        SIGNAL * prototype_c + spread * noise

so cnn-like activations and weights have mismatched element distributions
while vit-like pairs share shape.  Bias is drawn normal with stddev 0.01 so
the median-bias path is exercised nontrivially.  All values are quantized
to float32-representable numbers at generation time, which makes in-process
pipelines and file-replayed pipelines bit-identical.

Stream layout (attempt a of seed s, labels folded via SplitMix64):
  (1, a) prototypes | (2, a) bias | (3, a) train noise | (4, a) test noise.
A generated head must classify its own training rows with accuracy >= 0.9;
otherwise the next attempt resamples, up to 8 attempts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    InsufficientSamplesError,
    InvariantViolationError,
    UnsatisfiableSpecError,
)
from .evaluation import EvalReport, evaluate
from .formats import ClassifierHead, EmbeddingSet
from .head import predict_batch
from .imprinting import (
    ImprintMethod,
    add_class_done,
    add_class_qi,
    aggregate_shots,
    build_reference_profile,
    qi_modify_head,
)
from .rng import fold_seed, normals_block

SIGNAL = 0.3
SELF_ACCURACY_FLOOR = 0.9
MAX_ATTEMPTS = 8
_BIAS_STD = 0.01


class SynthKind(enum.Enum):
    CNN_LIKE = "cnn-like"
    VIT_LIKE = "vit-like"

    @classmethod
    def parse(cls, text: str) -> "SynthKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise InvariantViolationError(f"unknown preset {text!r}")


@dataclass(frozen=True)
class SynthPreset:
    kind: SynthKind
    num_classes: int = 20
    dim: int = 256
    samples_per_class: int = 40
    cluster_spread: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2 or self.dim < 1 or self.samples_per_class < 1:
            raise InvariantViolationError("counts and dims must be positive (classes >= 2)")
        if not self.cluster_spread > 0:
            raise InvariantViolationError("cluster_spread must be > 0")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "num_classes": self.num_classes,
            "dim": self.dim,
            "samples_per_class": self.samples_per_class,
            "cluster_spread": self.cluster_spread,
            "seed": self.seed,
        }


def _f32(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float32).astype(np.float64)


def _activations(kind: SynthKind, protos: np.ndarray, noise: np.ndarray,
                 spread: float) -> np.ndarray:
    # noise shape (C, S, M); prototypes broadcast over the sample axis
    z = SIGNAL * protos[:, None, :] + spread * noise
    if kind is SynthKind.CNN_LIKE:
        z = np.maximum(z, 0.0)
    return _f32(z)


def generate(preset: SynthPreset, holdout_classes: int = 0
             ) -> tuple[ClassifierHead, EmbeddingSet, EmbeddingSet]:
    """Sample (head, train, test); embeddings cover head + holdout classes."""
    if holdout_classes < 0:
        raise InvariantViolationError("holdout_classes must be >= 0")
    c_total = preset.num_classes + holdout_classes
    n, m, s = preset.num_classes, preset.dim, preset.samples_per_class
    names = tuple(f"class_{i:03d}" for i in range(c_total))
    labels = np.repeat(np.arange(c_total, dtype=np.int64), s)

    for attempt in range(MAX_ATTEMPTS):
        protos = _f32(
            normals_block(fold_seed(preset.seed, 1, attempt), c_total * m).reshape(c_total, m)
        )
        bias = _f32(normals_block(fold_seed(preset.seed, 2, attempt), n) * _BIAS_STD)
        train_noise = normals_block(
            fold_seed(preset.seed, 3, attempt), c_total * s * m
        ).reshape(c_total, s, m)
        test_noise = normals_block(
            fold_seed(preset.seed, 4, attempt), c_total * s * m
        ).reshape(c_total, s, m)

        train_rows = _activations(preset.kind, protos, train_noise,
                                  preset.cluster_spread).reshape(c_total * s, m)
        test_rows = _activations(preset.kind, protos, test_noise,
                                 preset.cluster_spread).reshape(c_total * s, m)

        head = ClassifierHead(weights=protos[:n], bias=bias, class_names=names[:n])
        own = train_rows[: n * s]
        accuracy = float(np.mean(predict_batch(head, own) == labels[: n * s]))
        if accuracy >= SELF_ACCURACY_FLOOR:
            train = EmbeddingSet(rows=train_rows, labels=labels, class_names=names)
            test = EmbeddingSet(rows=test_rows, labels=labels, class_names=names)
            return head, train, test

    raise UnsatisfiableSpecError(
        f"no attempt reached training accuracy {SELF_ACCURACY_FLOOR} "
        f"in {MAX_ATTEMPTS} tries (spread too large?)"
    )


@dataclass(frozen=True)
class MethodOutcome:
    interference_fraction: float
    new_class_accuracy: float | None
    original_accuracy: float | None

    def to_json_dict(self) -> dict:
        return {
            "interference_fraction": self.interference_fraction,
            "new_class_accuracy": self.new_class_accuracy,
            "original_accuracy": self.original_accuracy,
        }


@dataclass(frozen=True)
class InterferenceReport:
    preset: SynthPreset
    new_classes: int
    shots: int
    done: MethodOutcome
    qi: MethodOutcome

    def to_json_dict(self) -> dict:
        return {
            "preset": self.preset.to_json_dict(),
            "new_classes": self.new_classes,
            "shots": self.shots,
            "done": self.done.to_json_dict(),
            "qi": self.qi.to_json_dict(),
        }


def _support_vector(train: EmbeddingSet, class_id: int, shots: int,
                    method: ImprintMethod) -> np.ndarray:
    rows = np.flatnonzero(train.labels == class_id)
    if rows.shape[0] < shots:
        raise InsufficientSamplesError(
            f"class {train.class_names[class_id]!r} has {rows.shape[0]} rows, "
            f"needs {shots}"
        )
    return aggregate_shots([train.rows[i] for i in rows[:shots]], method)


def _outcome(report: EvalReport, new_ids) -> MethodOutcome:
    new_ids = set(new_ids)
    correct = sum(report.per_class_correct.get(i, 0) for i in new_ids)
    total = sum(report.per_class_total.get(i, 0) for i in new_ids)
    return MethodOutcome(
        interference_fraction=report.interference_fraction
        if report.interference_fraction is not None else 0.0,
        new_class_accuracy=(correct / total) if total else None,
        original_accuracy=report.original_top1_accuracy,
    )


def interference_experiment(preset: SynthPreset, new_classes: int,
                            shots: int) -> InterferenceReport:
    """Imprint held-out classes with both methods and compare interference."""
    if new_classes < 0 or shots < 1:
        raise InvariantViolationError("new_classes must be >= 0 and shots >= 1")
    head, train, test = generate(preset, holdout_classes=new_classes)
    held_out = range(preset.num_classes, preset.num_classes + new_classes)
    new_ids = set(range(head.num_classes, head.num_classes + new_classes))

    done_head = head
    if new_classes:
        profile = build_reference_profile(head)
        for c in held_out:
            vec = _support_vector(train, c, shots, ImprintMethod.DONE)
            done_head = add_class_done(done_head, vec, train.class_names[c],
                                       profile=profile)
    done_report = evaluate(done_head, test, new_ids)

    qi_head = qi_modify_head(head)
    for c in held_out:
        vec = _support_vector(train, c, shots, ImprintMethod.QI)
        qi_head = add_class_qi(qi_head, vec, train.class_names[c])
    qi_report = evaluate(qi_head, test, new_ids)

    return InterferenceReport(
        preset=preset,
        new_classes=new_classes,
        shots=shots,
        done=_outcome(done_report, new_ids),
        qi=_outcome(qi_report, new_ids),
    )


def _median(values) -> float:
    v = sorted(values)
    n = len(v)
    mid = n // 2
    if n % 2:
        return float(v[mid])
    return float((v[mid - 1] + v[mid]) / 2.0)


def multi_seed_interference(preset: SynthPreset, new_classes: int, shots: int,
                            seeds: int) -> dict:
    """Repeat the paired experiment over `seeds` runs; run i uses seed+i."""
    if seeds < 1:
        raise InvariantViolationError("seeds must be >= 1")
    runs = []
    for i in range(seeds):
        run_preset = replace(preset, seed=(preset.seed + i) & 0xFFFFFFFFFFFFFFFF)
        runs.append(interference_experiment(run_preset, new_classes, shots))
    done_med = _median([r.done.interference_fraction for r in runs])
    qi_med = _median([r.qi.interference_fraction for r in runs])
    return {
        "schema": 1,
        "preset": preset.to_json_dict(),
        "new_classes": new_classes,
        "shots": shots,
        "seeds": seeds,
        "runs": [
            {"seed": r.preset.seed, "done": r.done.to_json_dict(),
             "qi": r.qi.to_json_dict()}
            for r in runs
        ],
        "median": {
            "done_interference": done_med,
            "qi_interference": qi_med,
            "done_new_class_accuracy": _median(
                [r.done.new_class_accuracy for r in runs]
            ) if new_classes else None,
            "qi_new_class_accuracy": _median(
                [r.qi.new_class_accuracy for r in runs]
            ) if new_classes else None,
        },
    }
