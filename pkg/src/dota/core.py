"""Shared domain types: classifier head, sample records, configuration, posteriors.

Everything here is an immutable value object once constructed; ingestion
normalizes vectors exactly once so cosine similarity and dot product agree
everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import _kernels


class DotaError(Exception):
    """Base error for this package."""


class ValidationError(DotaError):
    """A value violates a documented invariant."""


class FormatError(DotaError):
    """An on-disk artifact is malformed or corrupt."""


class NumericalError(DotaError):
    """A numerical operation failed (e.g. matrix inversion)."""


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||_2 as float64. Rejects zero and non-finite vectors."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValidationError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("vector contains NaN or Inf")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValidationError("cannot normalize a zero vector")
    return v / norm


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max-subtraction before exponentiation)."""
    logits = np.ascontiguousarray(logits, dtype=np.float64)
    return _kernels.softmax(logits)


@dataclass(frozen=True)
class Posterior:
    """A categorical distribution over the K classes.

    confidence is the max entry; argmax resolves exact ties to the lowest
    class index.
    """

    probs: np.ndarray
    confidence: float
    argmax: int

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "Posterior":
        probs = np.asarray(probs, dtype=np.float64)
        if __debug__:
            if probs.ndim != 1 or probs.size == 0:
                raise ValidationError("posterior must be a nonempty 1-d vector")
            if not np.all(np.isfinite(probs)):
                raise ValidationError("posterior contains NaN or Inf")
            if abs(float(probs.sum()) - 1.0) > 1e-9:
                raise ValidationError("posterior entries must sum to 1")
            if probs.min() < -1e-12 or probs.max() > 1.0 + 1e-12:
                raise ValidationError("posterior entries must lie in [0, 1]")
        probs.flags.writeable = False
        idx = int(np.argmax(probs))
        return cls(probs=probs, confidence=float(probs[idx]), argmax=idx)

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "Posterior":
        # softmax output is finite, nonnegative, and normalized by
        # construction; the debug check is reduced to the sum invariant
        probs = softmax(logits)
        if __debug__:
            if not (abs(float(probs.sum()) - 1.0) <= 1e-9):
                raise ValidationError("posterior entries must sum to 1")
        probs.flags.writeable = False
        idx = int(np.argmax(probs))
        return cls(probs=probs, confidence=float(probs[idx]), argmax=idx)


@dataclass(frozen=True)
class ClassifierSpec:
    """The frozen zero-shot head: K class names, K unit weight vectors, temperature."""

    class_names: tuple
    weights: np.ndarray  # (K, D), rows unit-norm
    temperature: float

    @classmethod
    def create(cls, class_names: Sequence[str], weights: np.ndarray,
               temperature: float) -> "ClassifierSpec":
        names = tuple(str(n) for n in class_names)
        if len(names) < 2:
            raise ValidationError("classifier needs at least 2 classes")
        if any(not n for n in names):
            raise ValidationError("class names must be nonempty")
        if len(set(names)) != len(names):
            raise ValidationError("class names must be unique")
        W = np.asarray(weights, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != len(names):
            raise ValidationError(
                f"weights must be (K, D) with K={len(names)}, got shape {W.shape}")
        temperature = float(temperature)
        if not (temperature > 0) or not np.isfinite(temperature):
            raise ValidationError("temperature must be > 0")
        W = np.stack([normalize(w) for w in W])
        W.flags.writeable = False
        return cls(class_names=names, weights=W, temperature=temperature)

    @property
    def k(self) -> int:
        return len(self.class_names)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class EmbeddingRecord:
    """One test sample: id, unit embedding, optional label and display URI."""

    id: str
    embedding: np.ndarray
    true_label: Optional[int] = None
    asset_uri: Optional[str] = None

    @classmethod
    def create(cls, id: str, embedding: np.ndarray,
               true_label: Optional[int] = None,
               asset_uri: Optional[str] = None) -> "EmbeddingRecord":
        x = normalize(embedding)
        x.flags.writeable = False
        if true_label is not None:
            true_label = int(true_label)
            if true_label < 0:
                raise ValidationError(f"true_label must be >= 0, got {true_label}")
        return cls(id=str(id), embedding=x, true_label=true_label,
                   asset_uri=asset_uri)


_COV_BACKENDS = ("per-class", "pooled")
_FEEDBACK_MODES = ("none", "oracle", "human")


@dataclass(frozen=True)
class AdaptConfig:
    """All engine hyperparameters.

    freeze_covariance keeps every covariance slot at its sigma2*I initial value
    (the mean-only ablation); it is off in normal operation.
    """

    sigma2: float = 0.002
    epsilon: float = 1e-4
    rho: float = 0.01
    eta: float = 0.3
    gamma: float = 0.05
    cov_backend: str = "per-class"
    responsibility_floor: float = 1e-3
    precision_refresh_interval: int = 1
    uncertainty_warmup: int = 0
    feedback_mode: str = "none"
    freeze_covariance: bool = False

    def replace(self, **kw) -> "AdaptConfig":
        return replace(self, **kw)


def validate_config(cfg: AdaptConfig) -> AdaptConfig:
    """Return cfg unchanged if every field is in range; raise naming the field."""
    if not (cfg.sigma2 > 0):
        raise ValidationError("sigma2 must be > 0")
    if not (0 < cfg.epsilon < 1):
        raise ValidationError("epsilon must lie in (0,1)")
    if not (cfg.rho >= 0):
        raise ValidationError("rho must be >= 0")
    if not (cfg.eta >= 0):
        raise ValidationError("eta must be >= 0")
    if not (0 <= cfg.gamma <= 1):
        raise ValidationError("gamma must lie in [0,1]")
    if cfg.cov_backend not in _COV_BACKENDS:
        raise ValidationError(
            f"cov_backend must be one of {_COV_BACKENDS}, got {cfg.cov_backend!r}")
    if not (0 <= cfg.responsibility_floor < 1):
        raise ValidationError("responsibility_floor must lie in [0,1)")
    if not (isinstance(cfg.precision_refresh_interval, int)
            and cfg.precision_refresh_interval >= 1):
        raise ValidationError("precision_refresh_interval must be a positive integer")
    if not (isinstance(cfg.uncertainty_warmup, int) and cfg.uncertainty_warmup >= 0):
        raise ValidationError("uncertainty_warmup must be a nonnegative integer")
    if cfg.feedback_mode not in _FEEDBACK_MODES:
        raise ValidationError(
            f"feedback_mode must be one of {_FEEDBACK_MODES}, got {cfg.feedback_mode!r}")
    for f in fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, float) and not np.isfinite(val):
            raise ValidationError(f"{f.name} must be finite")
    return cfg
