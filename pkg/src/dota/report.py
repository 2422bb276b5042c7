"""Prediction log rows and the summary metrics derived from them.

Every summary quantity is a pure function of the row list so reports can be
recomputed offline from a JSON-lines file and must match the live run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .core import FormatError, ValidationError


@dataclass(frozen=True)
class PredictionRow:
    index: int
    id: str
    zs_argmax: int
    fused_argmax: int
    prediction: int
    confidence: float
    lam: float
    flagged: bool
    feedback_label: Optional[int] = None
    true_label: Optional[int] = None
    correct: Optional[bool] = None

    def to_json_dict(self) -> dict:
        d = {"index": self.index, "id": self.id, "zs_argmax": self.zs_argmax,
             "fused_argmax": self.fused_argmax, "prediction": self.prediction,
             "confidence": self.confidence, "lambda": self.lam,
             "flagged": self.flagged}
        if self.feedback_label is not None:
            d["feedback_label"] = self.feedback_label
        if self.true_label is not None:
            d["true_label"] = self.true_label
        if self.correct is not None:
            d["correct"] = self.correct
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "PredictionRow":
        return cls(index=d["index"], id=d["id"], zs_argmax=d["zs_argmax"],
                   fused_argmax=d["fused_argmax"], prediction=d["prediction"],
                   confidence=d["confidence"], lam=d["lambda"],
                   flagged=d["flagged"],
                   feedback_label=d.get("feedback_label"),
                   true_label=d.get("true_label"),
                   correct=d.get("correct"))


def _acc(flags: List[bool]) -> Optional[float]:
    if not flags:
        return None
    return sum(flags) / len(flags)


def window_series(rows: List[PredictionRow], window: int) -> List[dict]:
    """Disjoint consecutive windows covering every sample; the last window may
    be short. Entries carry both the adapted and zero-shot window accuracy."""
    if window <= 0:
        raise ValidationError("window must be positive")
    out = []
    for start in range(0, len(rows), window):
        chunk = rows[start:start + window]
        labeled = [r for r in chunk if r.true_label is not None]
        out.append({
            "start": start,
            "end": start + len(chunk),
            "acc": _acc([r.prediction == r.true_label for r in labeled]),
            "zs_acc": _acc([r.zs_argmax == r.true_label for r in labeled]),
        })
    return out


def improvement_curve(rows: List[PredictionRow], window: int) -> List[Tuple[int, float]]:
    """Per-window (end_index, adapted accuracy - zero-shot accuracy)."""
    if window > len(rows):
        raise ValidationError(
            f"window {window} exceeds the {len(rows)}-row log")
    out = []
    for entry in window_series(rows, window):
        if entry["acc"] is None or entry["zs_acc"] is None:
            raise ValidationError("improvement curve requires labeled samples")
        out.append((entry["end"], entry["acc"] - entry["zs_acc"]))
    return out


def summarize(rows: List[PredictionRow], window: int = 500) -> dict:
    """All headline metrics: overall/zero-shot/last-half accuracy, flagged
    subset statistics, and the per-window accuracy series."""
    n = len(rows)
    labeled = [r for r in rows if r.true_label is not None]
    flagged = [r for r in rows if r.flagged]
    flagged_labeled = [r for r in flagged if r.true_label is not None]
    last_half_n = math.ceil(n / 2)
    tail = [r for r in rows[n - last_half_n:] if r.true_label is not None]
    return {
        "n": n,
        "overall_acc": _acc([r.prediction == r.true_label for r in labeled]),
        "zs_acc": _acc([r.zs_argmax == r.true_label for r in labeled]),
        "last_half_acc": _acc([r.prediction == r.true_label for r in tail]),
        "flagged_count": len(flagged),
        "flagged_zs_acc": _acc([r.zs_argmax == r.true_label
                                for r in flagged_labeled]),
        "window": window,
        "windows": window_series(rows, window) if rows else [],
    }


@dataclass
class RunReport:
    rows: List[PredictionRow]
    summary: dict
    config: dict
    timing: dict

    @classmethod
    def build(cls, rows: List[PredictionRow], config: dict, timing: dict,
              window: int = 500) -> "RunReport":
        return cls(rows=rows, summary=summarize(rows, window=window),
                   config=config, timing=timing)


def write_report_jsonl(report: RunReport, path: str) -> None:
    """One JSON record per sample plus a final summary record."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in report.rows:
            fh.write(json.dumps(row.to_json_dict()) + "\n")
        fh.write(json.dumps({"summary": report.summary,
                             "config": report.config,
                             "timing": report.timing}) + "\n")


def read_report_jsonl(path: str) -> RunReport:
    rows: List[PredictionRow] = []
    summary = config = timing = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if "summary" in d:
                summary, config, timing = d["summary"], d.get("config", {}), d.get("timing", {})
            else:
                rows.append(PredictionRow.from_json_dict(d))
    if summary is None:
        raise FormatError(f"{path}: missing summary record")
    return RunReport(rows=rows, summary=summary, config=config, timing=timing)
