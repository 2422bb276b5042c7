"""Export jobs: classifier heads from prompted class names, streams from
image folders.

Images live either flat in one directory (unlabeled) or in one subdirectory
per class name (labeled). Unreadable images are skipped with a warning and
recorded in a sidecar skip manifest.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoders import _unit_rows
from .formats import write_classifier, write_stream

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


def read_lines(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def render_prompt(template: str, class_name: str) -> str:
    if "{}" in template:
        return template.format(class_name)
    return f"{template} {class_name}".strip()


def export_classifier(encoder, class_names: Sequence[str],
                      prompts: Sequence[str], out_path: str) -> np.ndarray:
    """Encode every prompt per class, average the normalized embeddings, and
    renormalize; write the head with the encoder's temperature."""
    if not prompts:
        raise ValueError("at least one prompt template is required")
    weights = []
    for name in class_names:
        texts = [render_prompt(t, name) for t in prompts]
        emb = encoder.encode_texts(texts)
        weights.append(emb.mean(axis=0))
    weights = _unit_rows(np.asarray(weights))
    write_classifier(out_path, class_names, weights, encoder.temperature)
    return weights


def collect_images(images_dir: str,
                   class_names: Optional[Sequence[str]] = None
                   ) -> List[Tuple[str, Optional[int]]]:
    """(path, label) pairs; labels come from per-class subdirectories when
    the directory layout matches the class list."""
    root = Path(images_dir)
    by_class = {name: idx for idx, name in enumerate(class_names or [])}
    out: List[Tuple[str, Optional[int]]] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        label = by_class.get(path.parent.name)
        out.append((str(path), label))
    return out


def export_stream(encoder, images_dir: str, out_path: str,
                  class_names: Optional[Sequence[str]] = None,
                  batch_size: int = 32) -> dict:
    entries = collect_images(images_dir, class_names)
    if not entries:
        raise ValueError(f"no images found under {images_dir}")
    kept: List[Tuple[str, Optional[int]]] = []
    skipped: List[dict] = []
    for path, label in entries:
        try:
            with Image.open(path) as img:
                img.verify()
            kept.append((path, label))
        except (UnidentifiedImageError, OSError) as exc:
            log.warning("skipping unreadable image %s: %s", path, exc)
            skipped.append({"path": path, "reason": str(exc)})
    if not kept:
        raise ValueError("every image failed to load")
    embeddings = []
    for start in range(0, len(kept), batch_size):
        chunk = [p for p, _ in kept[start:start + batch_size]]
        embeddings.append(encoder.encode_images(chunk))
    embeddings = np.vstack(embeddings)
    root = Path(images_dir)
    ids = [str(Path(p).relative_to(root)) for p, _ in kept]
    labels = [label for _, label in kept]
    uris = [Path(p).resolve().as_uri() for p, _ in kept]
    write_stream(out_path, ids, embeddings, labels=labels, asset_uris=uris)
    manifest = {"written": len(kept), "skipped": skipped}
    if skipped:
        with open(out_path + ".skipped.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
    return manifest
