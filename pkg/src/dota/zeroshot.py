"""Frozen zero-shot classifier: temperature-scaled cosine logits and softmax."""

from __future__ import annotations

import numpy as np

from .core import ClassifierSpec, Posterior, ValidationError


def zs_logits(x: np.ndarray, spec: ClassifierSpec) -> np.ndarray:
    """logit_k = <x, w_k> / temperature.

    Both x and the weight rows are unit vectors, so the dot product is the
    cosine similarity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.dim,):
        raise ValidationError(
            f"embedding has dimension {x.shape}, classifier expects ({spec.dim},)")
    return (spec.weights @ x) / spec.temperature


def zs_posterior(x: np.ndarray, spec: ClassifierSpec) -> Posterior:
    return Posterior.from_logits(zs_logits(x, spec))
