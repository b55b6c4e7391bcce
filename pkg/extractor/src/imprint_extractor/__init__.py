"""Embedding/head extraction for pretrained vision backbones.

Writes EMB1/HED1 files (the consumer toolkit's wire contract) from a model's
final-dense-layer inputs and weights.
"""

from .backbones import BackboneSpec, load_backbone, load_manifest
from .extract import extract_embeddings, extract_head
from .wire import emb1_bytes, hed1_bytes

__version__ = "0.1.0"

__all__ = [
    "BackboneSpec",
    "emb1_bytes",
    "extract_embeddings",
    "extract_head",
    "hed1_bytes",
    "load_backbone",
    "load_manifest",
]
