"""Embedding backends.

``toy:<dim>`` is a deterministic offline encoder for smoke tests and CI: it
projects a downscaled image through a fixed seeded random matrix and hashes
prompt text into a seeded direction. ``clip:<model>`` loads a pretrained
vision-language checkpoint through transformers and exports its learned
temperature alongside the embeddings.
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np
from PIL import Image

TOY_THUMB = 16


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return mat / norms


class ToyEncoder:
    """Checkpoint-free deterministic encoder (not semantically meaningful)."""

    name = "toy"

    def __init__(self, dim: int = 64, seed: int = 0, temperature: float = 0.05):
        self.dim = dim
        self.temperature = temperature
        rng = np.random.default_rng(seed)
        feat = TOY_THUMB * TOY_THUMB + 3
        self._proj = rng.normal(size=(feat, dim)) / np.sqrt(feat)

    def encode_images(self, paths: Sequence[str]) -> np.ndarray:
        rows = []
        for path in paths:
            with Image.open(path) as img:
                rgb = img.convert("RGB")
                gray = np.asarray(
                    rgb.resize((TOY_THUMB, TOY_THUMB)).convert("L"),
                    dtype=np.float64).ravel() / 255.0
                means = np.asarray(rgb.resize((1, 1)), dtype=np.float64).ravel() / 255.0
            rows.append(np.concatenate([gray, means]) @ self._proj)
        return _unit_rows(np.asarray(rows))

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for text in texts:
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            rows.append(rng.normal(size=self.dim))
        return _unit_rows(np.asarray(rows))


class ClipEncoder:
    """Pretrained vision-language checkpoint via transformers."""

    name = "clip"

    def __init__(self, model_id: str):
        import torch
        from transformers import CLIPModel, CLIPProcessor

        self._torch = torch
        self.model = CLIPModel.from_pretrained(model_id)
        self.model.eval()
        self.processor = CLIPProcessor.from_pretrained(model_id)
        self.dim = int(self.model.config.projection_dim)
        self.temperature = float(1.0 / self.model.logit_scale.exp().item())

    def encode_images(self, paths: Sequence[str]) -> np.ndarray:
        images = [Image.open(p).convert("RGB") for p in paths]
        inputs = self.processor(images=images, return_tensors="pt")
        with self._torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        return _unit_rows(feats.cpu().numpy().astype(np.float64))

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        inputs = self.processor(text=list(texts), return_tensors="pt",
                                padding=True, truncation=True)
        with self._torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return _unit_rows(feats.cpu().numpy().astype(np.float64))


def make_encoder(model_id: str):
    """`toy[:dim[:seed]]` or `clip:<huggingface-id-or-path>`."""
    if model_id.startswith("toy"):
        parts = model_id.split(":")
        dim = int(parts[1]) if len(parts) > 1 and parts[1] else 64
        seed = int(parts[2]) if len(parts) > 2 else 0
        return ToyEncoder(dim=dim, seed=seed)
    if model_id.startswith("clip:"):
        return ClipEncoder(model_id.split(":", 1)[1])
    raise ValueError(
        f"unknown model {model_id!r}; expected toy[:dim[:seed]] or clip:<id>")
