"""Label acquisition for gated-uncertain samples.

Three modes: ``none`` leaves the sample on its zero-shot responsibilities,
``oracle`` answers instantly from the record's ground-truth label, ``human``
parks the sample on a single-slot queue and blocks the stream until an
answer arrives (the service layer feeds the queue over HTTP). Answers enter
the estimator as one-hot responsibilities at weight 1.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import ClassifierSpec, EmbeddingRecord, Posterior, ValidationError
from .gda import Responsibilities

TOPK_DISPLAY = 5


@dataclass(frozen=True)
class FeedbackRequest:
    """What a labeler sees: the sample, and the model's current best guesses."""

    sample_id: str
    asset_uri: Optional[str]
    topk: Tuple[Tuple[str, float, float], ...]  # (class_name, fused_prob, zs_prob)
    created_at: float


@dataclass(frozen=True)
class FeedbackAnswer:
    sample_id: str
    label: int
    source: str  # "oracle" | "human"


def build_request(record: EmbeddingRecord, spec: ClassifierSpec,
                  fused_preview: Posterior, zs: Posterior) -> FeedbackRequest:
    """Top candidates ordered by the provisional fused probability."""
    order = np.argsort(-fused_preview.probs, kind="stable")[:min(spec.k, TOPK_DISPLAY)]
    topk = tuple((spec.class_names[i], float(fused_preview.probs[i]),
                  float(zs.probs[i])) for i in order)
    return FeedbackRequest(sample_id=record.id, asset_uri=record.asset_uri,
                           topk=topk, created_at=time.monotonic())


def to_responsibilities(answer: FeedbackAnswer, k: int) -> Responsibilities:
    """One-hot at weight 1.0; feedback mass always lands on exactly one class."""
    if not (0 <= answer.label < k):
        raise ValidationError(
            f"feedback label {answer.label} outside [0, {k})")
    return Responsibilities.one_hot(answer.label)


def oracle_answer(record: EmbeddingRecord) -> FeedbackAnswer:
    if record.true_label is None:
        raise ValidationError(
            f"oracle feedback requires labels; record {record.id!r} has none")
    return FeedbackAnswer(sample_id=record.id, label=record.true_label,
                          source="oracle")


class PendingFeedback:
    """Single-slot blocking queue between a session and its labelers.

    The session parks at most one request at a time; submit() is idempotent
    per sample id so HTTP retries cannot double-apply a label.
    """

    ACCEPTED = "accepted"
    DUPLICATE = "duplicate"
    STALE = "stale"
    INVALID = "invalid"

    def __init__(self, num_classes: int):
        self._k = num_classes
        self._cond = threading.Condition()
        self._request: Optional[FeedbackRequest] = None
        self._answer_label: Optional[int] = None
        self._answered: dict = {}
        self._closed = False

    def current(self) -> Optional[FeedbackRequest]:
        with self._cond:
            return self._request

    def submit(self, sample_id: str, label_index) -> str:
        """Try to answer the pending request; returns one of the outcome codes."""
        with self._cond:
            if not isinstance(label_index, int) or isinstance(label_index, bool) \
                    or not (0 <= label_index < self._k):
                return self.INVALID
            if self._request is None or self._request.sample_id != sample_id:
                if self._answered.get(sample_id) == label_index:
                    return self.DUPLICATE
                return self.STALE
            self._answer_label = label_index
            self._answered[sample_id] = label_index
            self._cond.notify_all()
            return self.ACCEPTED

    def ask(self, request: FeedbackRequest,
            timeout: Optional[float] = None) -> FeedbackAnswer:
        """Park the request and block until a label arrives."""
        with self._cond:
            self._request = request
            self._answer_label = None
            deadline = None if timeout is None else time.monotonic() + timeout
            while self._answer_label is None and not self._closed:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    self._request = None
                    raise TimeoutError(
                        f"no label arrived for sample {request.sample_id!r}")
                self._cond.wait(timeout=remaining)
            if self._closed and self._answer_label is None:
                self._request = None
                raise ValidationError("feedback queue closed while waiting")
            label = self._answer_label
            self._request = None
            self._answer_label = None
            return FeedbackAnswer(sample_id=request.sample_id, label=label,
                                  source="human")

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()
