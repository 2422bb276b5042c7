"""Writers for the engine's on-disk formats.

The byte layouts are the engine's public interface: little-endian, float32
vectors, `DCLS` for classifier heads and `DEMB` for embedding streams (flags
bit0 = labels present, bit1 = asset URIs present; label -1 means absent).
"""

from __future__ import annotations

import struct
from typing import Optional, Sequence

import numpy as np

VERSION = 1
FLAG_LABELS = 1
FLAG_URIS = 2


def write_classifier(path: str, class_names: Sequence[str],
                     weights: np.ndarray, temperature: float) -> None:
    weights = np.asarray(weights, dtype=np.float64)
    k, dim = weights.shape
    if k != len(class_names):
        raise ValueError("one weight row per class name required")
    with open(path, "wb") as fh:
        fh.write(b"DCLS")
        fh.write(struct.pack("<IIIf", VERSION, k, dim, float(temperature)))
        for name, row in zip(class_names, weights):
            raw = str(name).encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(row.astype("<f4").tobytes())


def write_stream(path: str, ids: Sequence[str], embeddings: np.ndarray,
                 labels: Optional[Sequence[Optional[int]]] = None,
                 asset_uris: Optional[Sequence[Optional[str]]] = None) -> None:
    embeddings = np.asarray(embeddings, dtype=np.float64)
    n, dim = embeddings.shape
    has_labels = labels is not None and any(l is not None for l in labels)
    has_uris = asset_uris is not None and any(u for u in asset_uris)
    flags = (FLAG_LABELS if has_labels else 0) | (FLAG_URIS if has_uris else 0)
    with open(path, "wb") as fh:
        fh.write(b"DEMB")
        fh.write(struct.pack("<IIQI", VERSION, dim, n, flags))
        for i in range(n):
            ident = str(ids[i]).encode("utf-8")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(embeddings[i].astype("<f4").tobytes())
            if has_labels:
                label = labels[i] if labels is not None else None
                fh.write(struct.pack("<i", -1 if label is None else int(label)))
            if has_uris:
                uri = (asset_uris[i] or "") if asset_uris is not None else ""
                raw = uri.encode("utf-8")
                fh.write(struct.pack("<H", len(raw)))
                fh.write(raw)
