"""Backbone registry: wrappers that expose final-dense-layer inputs.

Every backbone yields (a) the feature vector that feeds the classification
dense layer for an image, and (b) that layer's weights/bias/class names.
Preprocessing is pinned per model in manifest.json because top-1 agreement
between producer and consumer is meaningless if preprocessing drifts.

The `toy` backbone is a dependency-free deterministic stand-in (seeded
random projection + relu + dense head) used by the test suite; torchvision
models load lazily and need downloadable weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from PIL import Image


class ModelLoadFailureError(RuntimeError):
    pass


class DecodeFailureError(RuntimeError):
    pass


class NoDenseHeadError(RuntimeError):
    pass


def load_manifest() -> dict:
    with resources.files(__package__).joinpath("manifest.json").open() as f:
        return json.load(f)


@dataclass(frozen=True)
class BackboneSpec:
    model_id: str
    resolution: int
    recipe: dict
    tap: str

    @classmethod
    def from_manifest(cls, model_id: str) -> "BackboneSpec":
        manifest = load_manifest()
        if model_id not in manifest:
            raise ModelLoadFailureError(
                f"unknown backbone {model_id!r}; known: {sorted(manifest)}"
            )
        entry = manifest[model_id]
        return cls(model_id=model_id, resolution=entry["resolution"],
                   recipe=entry, tap=entry["tap"])


def _decode(path, size: int) -> np.ndarray:
    try:
        with Image.open(path) as img:
            img = img.convert("RGB").resize((size, size), Image.BILINEAR)
            return np.asarray(img, dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DecodeFailureError(f"{path}: {exc}")


class ToyBackbone:
    """Seeded random projection + relu, with a 10-class dense head.

    Fully deterministic and self-contained; exists so the extraction
    pipeline and the wire contract can be exercised without any downloads.
    """

    FEATURE_DIM = 64
    NUM_CLASSES = 10

    def __init__(self, spec: BackboneSpec):
        self.spec = spec
        rng = np.random.default_rng(0x70AD)
        pixels = spec.resolution * spec.resolution * 3
        self._proj = rng.standard_normal((pixels, self.FEATURE_DIM)) / np.sqrt(pixels)
        self._w = rng.standard_normal((self.NUM_CLASSES, self.FEATURE_DIM)).astype(np.float32)
        self._b = (rng.standard_normal(self.NUM_CLASSES) * 0.01).astype(np.float32)
        self.class_names = tuple(f"toy_{i}" for i in range(self.NUM_CLASSES))

    def features(self, image_path) -> np.ndarray:
        """Input of the final dense layer, quantized like the wire format."""
        flat = _decode(image_path, self.spec.resolution).reshape(-1)
        return np.maximum(flat @ self._proj, 0.0).astype(np.float32)

    def head(self):
        return self._w, self._b, self.class_names

    def predict(self, image_path) -> int:
        """The runtime's own top-1, from the same quantized tensors."""
        x = self.features(image_path).astype(np.float64)
        scores = self._w.astype(np.float64) @ x + self._b.astype(np.float64)
        return int(np.argmax(scores))


class TorchvisionBackbone:
    """Hooks the input of the final classification Linear of a tv model."""

    def __init__(self, spec: BackboneSpec):
        try:
            import torch
            import torchvision.models as tvm
        except ImportError as exc:
            raise ModelLoadFailureError(f"torch/torchvision unavailable: {exc}")
        self._torch = torch
        entry = spec.recipe
        try:
            builder = getattr(tvm, spec.model_id)
            self._model = builder(weights=entry["weights"]).eval()
        except Exception as exc:
            raise ModelLoadFailureError(f"{spec.model_id}: {exc}")
        self.spec = spec
        self._linear = self._final_linear()
        meta = getattr(
            tvm.get_model_weights(spec.model_id), entry["weights"]
        ).meta
        self.class_names = tuple(meta["categories"])

    def _final_linear(self):
        import torch.nn as nn

        last = None
        for module in self._model.modules():
            if isinstance(module, nn.Linear):
                last = module
        if last is None:
            raise NoDenseHeadError(f"{self.spec.model_id} has no dense head")
        return last

    def _preprocess(self, image_path):
        entry = self.spec.recipe
        try:
            with Image.open(image_path) as img:
                img = img.convert("RGB")
                resample = {
                    "bilinear": Image.BILINEAR,
                    "bicubic": Image.BICUBIC,
                }[entry["interpolation"]]
                img = img.resize((entry["resize"], entry["resize"]), resample)
                if entry["center_crop"]:
                    c = entry["center_crop"]
                    left = (entry["resize"] - c) // 2
                    img = img.crop((left, left, left + c, left + c))
                arr = np.asarray(img, dtype=np.float32) / 255.0
        except (OSError, ValueError) as exc:
            raise DecodeFailureError(f"{image_path}: {exc}")
        arr = (arr - np.asarray(entry["mean"], dtype=np.float32)) / np.asarray(
            entry["std"], dtype=np.float32
        )
        return self._torch.from_numpy(arr.transpose(2, 0, 1))[None]

    def features(self, image_path) -> np.ndarray:
        captured = {}

        def hook(module, inputs, output):
            captured["x"] = inputs[0].detach()

        handle = self._linear.register_forward_hook(hook)
        try:
            with self._torch.no_grad():
                self._model(self._preprocess(image_path))
        finally:
            handle.remove()
        x = captured["x"].reshape(-1).cpu().numpy()
        return x.astype(np.float32)

    def head(self):
        w = self._linear.weight.detach().cpu().numpy().astype(np.float32)
        b = (
            self._linear.bias.detach().cpu().numpy().astype(np.float32)
            if self._linear.bias is not None
            else np.zeros(w.shape[0], dtype=np.float32)
        )
        return w, b, self.class_names

    def predict(self, image_path) -> int:
        with self._torch.no_grad():
            out = self._model(self._preprocess(image_path))
        return int(out.reshape(-1).argmax().item())


def load_backbone(model_id: str):
    spec = BackboneSpec.from_manifest(model_id)
    if spec.recipe["family"] == "builtin":
        return ToyBackbone(spec)
    return TorchvisionBackbone(spec)
