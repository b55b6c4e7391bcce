"""Folder-to-file extraction: images in, EMB1/HED1 bytes out.

Image source convention: a root directory whose immediate subdirectories are
class names; every image file inside a class directory is one row.  Paths
are sorted (class directories, then filenames) so output order is stable.
"""

from __future__ import annotations

import os

import numpy as np

from .backbones import DecodeFailureError, load_backbone
from .wire import emb1_bytes, hed1_bytes

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


def list_labeled_images(root: str) -> tuple[list[str], list[int], list[str]]:
    classes = sorted(
        d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d))
    )
    if not classes:
        raise DecodeFailureError(f"{root}: no class subdirectories")
    paths: list[str] = []
    labels: list[int] = []
    for idx, cls in enumerate(classes):
        cdir = os.path.join(root, cls)
        files = sorted(
            f for f in os.listdir(cdir)
            if os.path.splitext(f)[1].lower() in _IMAGE_SUFFIXES
        )
        for f in files:
            paths.append(os.path.join(cdir, f))
            labels.append(idx)
    if not paths:
        raise DecodeFailureError(f"{root}: no images found")
    return paths, labels, classes


def extract_embeddings(model_id: str, image_root: str) -> bytes:
    """One EMB1 row per image, in listed order, labeled by class directory."""
    backbone = load_backbone(model_id)
    paths, labels, classes = list_labeled_images(image_root)
    rows = np.stack([backbone.features(p) for p in paths])
    return emb1_bytes(rows, labels, classes)


def extract_embeddings_with_runtime_labels(model_id: str, image_root: str) -> bytes:
    """Label each row with the runtime's own top-1 prediction.

    Feeding this file to the consumer's `eval` measures producer/consumer
    prediction agreement directly: accuracy 1.0 means every stored embedding
    reproduces the runtime's own decision.
    """
    backbone = load_backbone(model_id)
    paths, _, _ = list_labeled_images(image_root)
    rows = np.stack([backbone.features(p) for p in paths])
    labels = [backbone.predict(p) for p in paths]
    names = backbone.head()[2]
    return emb1_bytes(rows, labels, names)


def extract_head(model_id: str) -> bytes:
    """The final dense layer as an unmodified HED1 snapshot (flags clear)."""
    backbone = load_backbone(model_id)
    w, b, names = backbone.head()
    return hed1_bytes(w, b, names, rows_l2_normalized=False, bias_ignored=False)
