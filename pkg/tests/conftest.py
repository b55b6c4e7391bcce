import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from imprintlab.formats import ClassifierHead, EmbeddingSet  # noqa: E402


def f32_values(rng: np.random.Generator, shape, scale=1.0):
    """Random float32-representable float64 values (what file IO produces)."""
    return (rng.standard_normal(shape) * scale).astype(np.float32).astype(np.float64)


def random_head(rng: np.random.Generator, n: int, m: int) -> ClassifierHead:
    return ClassifierHead(
        weights=f32_values(rng, (n, m)),
        bias=f32_values(rng, n),
        class_names=tuple(f"c{i}" for i in range(n)),
    )


def random_embeddings(rng: np.random.Generator, s: int, m: int,
                      c: int) -> EmbeddingSet:
    return EmbeddingSet(
        rows=f32_values(rng, (s, m)),
        labels=rng.integers(0, c, size=s),
        class_names=tuple(f"k{i}" for i in range(c)),
    )


@pytest.fixture
def nprng():
    return np.random.default_rng(0xC0FFEE)
