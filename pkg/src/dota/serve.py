"""HTTP surface for the human-in-the-loop labeler.

The engine thread blocks on at most one pending request at a time, so the
protocol is plain polling: GET the pending sample (204 when there is none),
POST a label for it, GET live metrics. Label POSTs are idempotent per sample
id; a stale or mismatched sample id answers 409 and an out-of-range label 422.
"""

from __future__ import annotations

import threading
import uuid
from typing import List, Optional

from fastapi import FastAPI, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import feedback as fb
from .core import AdaptConfig, ClassifierSpec, EmbeddingRecord
from .report import improvement_curve, write_report_jsonl
from .session import STATUS_ERROR, Session


class SessionRunner:
    """Drives one session over a fixed record list on a worker thread."""

    def __init__(self, spec: ClassifierSpec, cfg: AdaptConfig,
                 records: List[EmbeddingRecord], strategy: str = "confidence",
                 seed: int = 0, window: int = 500,
                 report_path: Optional[str] = None):
        self.session = Session(spec, cfg, strategy=strategy, seed=seed)
        self.session_id = uuid.uuid4().hex[:12]
        self.records = records
        self.window = window
        self.report_path = report_path
        self.error: Optional[str] = None
        self._thread = threading.Thread(target=self._work, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def join(self, timeout: Optional[float] = None) -> None:
        self._thread.join(timeout=timeout)

    def _work(self) -> None:
        try:
            report = self.session.run_stream(self.records, window=self.window)
            if self.report_path:
                write_report_jsonl(report, self.report_path)
        except Exception as exc:  # surfaced through /sessions
            self.error = str(exc)
            self.session.status = STATUS_ERROR

    # ------------------------------------------------------------- snapshots

    def describe(self) -> dict:
        s = self.session
        return {
            "session_id": self.session_id,
            "status": s.status,
            "progress": {"processed": s.fusion_count,
                         "total": len(self.records)},
            "gamma": s.cfg.gamma,
            "feedback_mode": s.cfg.feedback_mode,
            "error": self.error,
        }

    def metrics(self) -> dict:
        report = self.session.build_report(window=self.window)
        curve = []
        if report.rows and report.rows[0].true_label is not None:
            n_full = (len(report.rows) // self.window) * self.window
            if n_full >= self.window:
                curve = [{"end": end, "improvement": diff}
                         for end, diff in improvement_curve(
                             report.rows[:n_full], self.window)]
        flagged_fraction = (report.summary["flagged_count"] / len(report.rows)
                            if report.rows else 0.0)
        lam = report.rows[-1].lam if report.rows else 0.0
        return {"summary": report.summary, "improvement_curve": curve,
                "lambda": lam, "flagged_fraction": flagged_fraction,
                "gamma": self.session.cfg.gamma}


class LabelBody(BaseModel):
    sample_id: str
    label_index: int


def create_app(runner: SessionRunner, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="dota labeling service")
    runners = {runner.session_id: runner}

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request, exc):
        # Missing fields or unparseable JSON are client errors, not
        # unprocessable-entity semantics; label range checks return 422.
        return JSONResponse({"detail": "malformed request body"},
                            status_code=400)

    def _get(session_id: str) -> Optional[SessionRunner]:
        return runners.get(session_id)

    @app.get("/api/v1/sessions")
    def list_sessions():
        return [r.describe() for r in runners.values()]

    @app.get("/api/v1/sessions/{session_id}/pending")
    def pending(session_id: str):
        r = _get(session_id)
        if r is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        queue = r.session.queue
        request = queue.current() if queue is not None else None
        if request is None:
            return Response(status_code=204)
        return {"sample_id": request.sample_id,
                "asset_uri": request.asset_uri,
                "topk": [{"class_name": n, "fused_prob": f, "zs_prob": z}
                         for n, f, z in request.topk],
                "created_at": request.created_at}

    @app.post("/api/v1/sessions/{session_id}/label")
    def label(session_id: str, body: LabelBody):
        r = _get(session_id)
        if r is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        queue = r.session.queue
        if queue is None:
            return JSONResponse(
                {"detail": "session does not take human feedback"},
                status_code=409)
        outcome = queue.submit(body.sample_id, body.label_index)
        if outcome == fb.PendingFeedback.INVALID:
            return JSONResponse({"detail": "label_index out of range"},
                                status_code=422)
        if outcome == fb.PendingFeedback.STALE:
            return JSONResponse(
                {"detail": "sample_id is not the pending request"},
                status_code=409)
        return {"status": "ok", "outcome": outcome}

    @app.get("/api/v1/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        r = _get(session_id)
        if r is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        return r.metrics()

    @app.get("/api/v1/sessions/{session_id}/classes")
    def classes(session_id: str):
        r = _get(session_id)
        if r is None:
            return JSONResponse({"detail": "unknown session"}, status_code=404)
        return {"class_names": list(r.session.spec.class_names)}

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app
