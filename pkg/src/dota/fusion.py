"""Fusion of zero-shot logits with discriminant scores under a ramped weight."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AdaptConfig, Posterior, ValidationError, softmax


@dataclass(frozen=True)
class FusionWeight:
    """weight = min(rho * sample_count, eta); sample_count is the number of
    samples completed before the current one."""

    weight: float
    sample_count: int


def lambda_schedule(c: int, cfg: AdaptConfig) -> FusionWeight:
    if c < 0:
        raise ValidationError("sample count must be nonnegative")
    return FusionWeight(weight=min(cfg.rho * c, cfg.eta), sample_count=c)


def fused_posterior(zs_logits: np.ndarray, f: np.ndarray, lam: float) -> Posterior:
    """softmax(zs_logits + lam * f); the argmax is the final prediction."""
    zs_logits = np.asarray(zs_logits, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if zs_logits.shape != f.shape:
        raise ValidationError(
            f"logit vectors disagree in length: {zs_logits.shape} vs {f.shape}")
    return Posterior.from_probs(softmax(zs_logits + lam * f))
