"""Streaming percentile gate over the running confidence history.

A sample is uncertain when its score falls at or below the gamma-th
nearest-rank percentile of all scores seen so far, the current one included.
Two alternative selection strategies exist for comparison studies: raw cosine
similarity instead of softmax confidence, and seeded random flagging.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import AdaptConfig, ClassifierSpec, Posterior, ValidationError

STRATEGIES = ("confidence", "similarity", "random")


def percentile(scores, gamma: float) -> float:
    """Nearest-rank percentile: the r-th smallest with r = max(1, ceil(gamma*n))."""
    n = len(scores)
    if n == 0:
        raise ValidationError("percentile of an empty score list")
    if not (0 <= gamma <= 1):
        raise ValidationError("gamma must lie in [0,1]")
    rank = max(1, math.ceil(gamma * n))
    return float(sorted(scores)[rank - 1])


@dataclass
class ScoreHistory:
    """Append-only record of gate scores plus a parallel sorted view for rank
    queries; owns the RNG for the random strategy."""

    strategy: str = "confidence"
    rng_seed: int = 0
    scores: List[float] = field(default_factory=list)
    _sorted: List[float] = field(default_factory=list)
    _rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self._rng is None:
            self._rng = np.random.default_rng(self.rng_seed)
        if self.scores and not self._sorted:
            self._sorted = sorted(self.scores)

    def __len__(self) -> int:
        return len(self.scores)

    def append(self, score: float) -> None:
        self.scores.append(score)
        bisect.insort(self._sorted, score)

    def threshold(self, gamma: float) -> float:
        rank = max(1, math.ceil(gamma * len(self._sorted)))
        return self._sorted[rank - 1]

    def rng_state(self) -> dict:
        return self._rng.bit_generator.state

    def set_rng_state(self, state: dict) -> None:
        self._rng.bit_generator.state = state


def gate(x: np.ndarray, zs: Posterior, history: ScoreHistory,
         spec: ClassifierSpec, cfg: AdaptConfig) -> bool:
    """Append the sample's score and decide whether it is uncertain.

    confidence: score is the max zero-shot probability, flag iff score <= the
    gamma percentile of the history including this sample. similarity: same
    rule with the max cosine similarity (pre-softmax). random: flag with
    probability gamma from the seeded generator; the confidence score is still
    appended so downstream metrics see a full history. Samples inside the
    warmup window are never flagged.
    """
    if history.strategy == "similarity":
        score = float((spec.weights @ np.asarray(x, dtype=np.float64)).max())
    else:
        score = zs.confidence
    history.append(score)
    i = len(history)
    if history.strategy == "random":
        flagged = float(history._rng.random()) < cfg.gamma
    else:
        # gamma = 0 means "no samples are uncertain"; without this guard the
        # <= comparison would still flag every new running minimum.
        flagged = cfg.gamma > 0 and score <= history.threshold(cfg.gamma)
    if i <= cfg.uncertainty_warmup:
        return False
    return flagged
