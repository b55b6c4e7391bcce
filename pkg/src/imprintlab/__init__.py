"""imprintlab: add classes to frozen classifier heads without training.

Core pieces: bit-exact EMB1/HED1 containers, quantile and normalized-linear
weight imprinting, accuracy/interference evaluation, a seeded N-way K-shot
episode benchmark, weight-space diagnostics, and a synthetic generator for
the activation/weight distribution-mismatch regime.
"""

from .errors import ImprintLabError
from .formats import (
    ClassifierHead,
    EmbeddingSet,
    read_embeddings,
    read_embeddings_csv,
    read_head,
    write_embeddings,
    write_embeddings_csv,
    write_head,
)
from .head import cosine_similarity, l2_normalize, logits, predict
from .imprinting import (
    ImprintMethod,
    ReferenceProfile,
    add_class_done,
    add_class_qi,
    add_classes_done,
    aggregate_shots,
    build_reference_profile,
    qi_modify_head,
    quantile_normalize,
)
from .evaluation import (
    EpisodeSpec,
    EvalReport,
    accuracy_vs_shots,
    evaluate,
    run_episodes,
)
from .diagnostics import distribution_mismatch, histogram, moments, pca
from .synth import SynthKind, SynthPreset, generate, interference_experiment

__version__ = "0.1.0"

__all__ = [
    "ClassifierHead",
    "EmbeddingSet",
    "EpisodeSpec",
    "EvalReport",
    "ImprintLabError",
    "ImprintMethod",
    "ReferenceProfile",
    "SynthKind",
    "SynthPreset",
    "accuracy_vs_shots",
    "add_class_done",
    "add_class_qi",
    "add_classes_done",
    "aggregate_shots",
    "build_reference_profile",
    "cosine_similarity",
    "distribution_mismatch",
    "evaluate",
    "generate",
    "histogram",
    "interference_experiment",
    "l2_normalize",
    "logits",
    "moments",
    "pca",
    "predict",
    "qi_modify_head",
    "quantile_normalize",
    "read_embeddings",
    "read_embeddings_csv",
    "read_head",
    "run_episodes",
    "write_embeddings",
    "write_embeddings_csv",
    "write_head",
]
