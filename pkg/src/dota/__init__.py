"""Streaming test-time adaptation for frozen zero-shot embedding classifiers.

The engine keeps per-class Gaussian estimates updated from the unlabeled test
stream itself, scores samples with a shared shrunk-precision discriminant,
fuses those scores with the frozen zero-shot logits under a ramped weight,
and can route low-confidence samples to an oracle or a human labeler.
"""

from .core import (AdaptConfig, ClassifierSpec, DotaError, EmbeddingRecord,
                   FormatError, NumericalError, Posterior, ValidationError,
                   normalize, softmax, validate_config)
from .fusion import FusionWeight, fused_posterior, lambda_schedule
from .gda import (GdaState, Responsibilities, batch_estimate,
                  discriminant_scores, gda_posterior, init_state,
                  refresh_precision, shared_covariance,
                  truncate_responsibilities, update)
from .report import PredictionRow, RunReport, improvement_curve, summarize
from .session import Session
from .uncertainty import ScoreHistory, gate, percentile
from .zeroshot import zs_logits, zs_posterior

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig", "ClassifierSpec", "DotaError", "EmbeddingRecord",
    "FormatError", "FusionWeight", "GdaState", "NumericalError", "Posterior",
    "PredictionRow", "Responsibilities", "RunReport", "ScoreHistory",
    "Session", "ValidationError", "batch_estimate", "discriminant_scores",
    "fused_posterior", "gate", "gda_posterior", "improvement_curve",
    "init_state", "lambda_schedule", "normalize", "percentile",
    "refresh_precision", "shared_covariance", "softmax", "summarize",
    "truncate_responsibilities", "update", "validate_config", "zs_logits",
    "zs_posterior", "__version__",
]
