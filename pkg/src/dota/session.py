"""Per-sample orchestration of the adaptation loop.

Order of operations for every sample, which the tests instrument:
zero-shot posterior -> uncertainty gate -> feedback (blocking in human mode)
-> distribution update -> discriminant scoring -> fusion -> bookkeeping.
The update deliberately precedes scoring, so each sample influences its own
adapted score. A sample that raises is logged and skipped without touching
the estimator.
"""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable, Iterable, Optional

from . import feedback as fb
from . import gda, uncertainty, zeroshot
from .core import (AdaptConfig, ClassifierSpec, DotaError, EmbeddingRecord,
                   Posterior, ValidationError, validate_config)
from .fusion import fused_posterior, lambda_schedule
from .report import PredictionRow, RunReport

log = logging.getLogger(__name__)

STATUS_RUNNING = "running"
STATUS_WAITING = "waiting_feedback"
STATUS_FINISHED = "finished"
STATUS_ERROR = "error"


class Session:
    """Owns all mutable run state for one stream.

    One session is driven by one thread; the HTTP service may concurrently
    read metrics and feed the feedback queue, synchronizing on the session
    lock and on the queue's own condition.
    """

    def __init__(self, spec: ClassifierSpec, cfg: AdaptConfig,
                 strategy: str = "confidence", seed: int = 0):
        validate_config(cfg)
        self.spec = spec
        self.cfg = cfg
        self.gda = gda.init_state(spec, cfg)
        self.history = uncertainty.ScoreHistory(strategy=strategy, rng_seed=seed)
        self.fusion_count = 0
        self.stream_index = 0
        self.rows: list[PredictionRow] = []
        self.seed = seed
        self.queue: Optional[fb.PendingFeedback] = None
        if cfg.feedback_mode == "human":
            self.queue = fb.PendingFeedback(spec.k)
        self.status = STATUS_RUNNING
        self.total: Optional[int] = None
        self.lock = threading.RLock()

    # ---------------------------------------------------------------- core

    def process_record(self, record: EmbeddingRecord) -> PredictionRow:
        x = record.embedding
        if x.shape != (self.spec.dim,):
            raise ValidationError(
                f"record {record.id!r}: dimension {x.shape[0]} does not match "
                f"classifier dimension {self.spec.dim}")
        if record.true_label is not None and record.true_label >= self.spec.k:
            raise ValidationError(
                f"record {record.id!r}: label {record.true_label} outside "
                f"[0, {self.spec.k})")
        with self.lock:
            logits = zeroshot.zs_logits(x, self.spec)
            zs = Posterior.from_logits(logits)
            flagged = uncertainty.gate(x, zs, self.history, self.spec, self.cfg)
            answer = None
            request = None
            if flagged and self.cfg.feedback_mode == "oracle":
                answer = fb.oracle_answer(record)
            elif flagged and self.cfg.feedback_mode == "human":
                preview = fused_posterior(
                    logits, gda.discriminant_scores(self.gda, x),
                    lambda_schedule(self.fusion_count, self.cfg).weight)
                request = fb.build_request(record, self.spec, preview, zs)

        if request is not None:
            # Block outside the lock so metric readers stay live.
            self.status = STATUS_WAITING
            try:
                answer = self.queue.ask(request)
            finally:
                self.status = STATUS_RUNNING

        with self.lock:
            if answer is not None:
                resp = fb.to_responsibilities(answer, self.spec.k)
            else:
                resp = gda.truncate_responsibilities(zs, self.cfg)
            gda.update(self.gda, x, resp)
            scores = gda.discriminant_scores(self.gda, x)
            weight = lambda_schedule(self.fusion_count, self.cfg)
            fused = fused_posterior(logits, scores, weight.weight)
            prediction = answer.label if answer is not None else fused.argmax
            correct = None
            if record.true_label is not None:
                correct = bool(prediction == record.true_label)
            row = PredictionRow(
                index=self.fusion_count, id=record.id, zs_argmax=zs.argmax,
                fused_argmax=fused.argmax, prediction=int(prediction),
                confidence=zs.confidence, lam=weight.weight, flagged=flagged,
                feedback_label=answer.label if answer is not None else None,
                true_label=record.true_label, correct=correct)
            self.rows.append(row)
            self.fusion_count += 1
            return row

    def run_stream(self, records: Iterable[EmbeddingRecord],
                   window: int = 500,
                   progress: Optional[Callable[[PredictionRow], None]] = None,
                   stop_after: Optional[int] = None) -> RunReport:
        """Process records in order and assemble the report.

        stop_after limits how many *additional* samples this call consumes,
        which is how mid-stream checkpoints are produced.
        """
        started = time.perf_counter()
        cpu_started = time.process_time()
        consumed = 0
        try:
            for record in records:
                self.stream_index += 1
                try:
                    row = self.process_record(record)
                except ValidationError as exc:
                    log.warning("skipping record %s at stream position %d: %s",
                                record.id, self.stream_index, exc)
                    continue
                consumed += 1
                if progress is not None:
                    progress(row)
                if stop_after is not None and consumed >= stop_after:
                    break
        except DotaError:
            self.status = STATUS_ERROR
            raise
        else:
            if stop_after is None or consumed < stop_after:
                self.status = STATUS_FINISHED
        elapsed = time.perf_counter() - started
        cpu = time.process_time() - cpu_started
        return self.build_report(window=window, elapsed=elapsed, cpu=cpu)

    def build_report(self, window: int = 500, elapsed: Optional[float] = None,
                     cpu: Optional[float] = None) -> RunReport:
        with self.lock:
            timing = {"seconds": elapsed, "cpu_seconds": cpu,
                      "samples_per_second":
                          (len(self.rows) / elapsed) if elapsed else None}
            return RunReport.build(list(self.rows), config=self.config_echo(),
                                   timing=timing, window=window)

    def config_echo(self) -> dict:
        from dataclasses import asdict
        d = asdict(self.cfg)
        d["strategy"] = self.history.strategy
        d["seed"] = self.seed
        return d
