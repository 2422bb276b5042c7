"""Analysis runs: improvement curves, the covariance ablation, and the
uncertainty-selection strategy comparison.

Every comparison fixes the stream, configuration, and seed so that the only
varying factor is the thing under study.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

from .core import AdaptConfig, ClassifierSpec, EmbeddingRecord, ValidationError
from .report import RunReport, improvement_curve, summarize  # noqa: F401
from .session import Session


def run_once(records: Sequence[EmbeddingRecord], spec: ClassifierSpec,
             cfg: AdaptConfig, strategy: str = "confidence", seed: int = 0,
             window: int = 500) -> RunReport:
    session = Session(spec, cfg, strategy=strategy, seed=seed)
    return session.run_stream(list(records), window=window)


def ablate_covariance(records: Sequence[EmbeddingRecord], spec: ClassifierSpec,
                      cfg: AdaptConfig, seed: int = 0,
                      window: int = 500) -> Tuple[RunReport, RunReport]:
    """(full run, frozen-covariance run) on identical streams and seeds.

    The frozen variant keeps every covariance slot at sigma2 * I forever, so
    its discriminant ranks classes purely by distance to the adapted means.
    """
    records = list(records)
    full = run_once(records, spec, cfg.replace(freeze_covariance=False),
                    seed=seed, window=window)
    frozen = run_once(records, spec, cfg.replace(freeze_covariance=True),
                      seed=seed, window=window)
    return full, frozen


def compare_strategies(records: Sequence[EmbeddingRecord], spec: ClassifierSpec,
                       cfg: AdaptConfig,
                       strategies: Sequence[str] = ("random", "similarity",
                                                    "confidence"),
                       gammas: Sequence[float] = (0.05, 0.15),
                       seed: int = 0, window: int = 500) -> List[dict]:
    """Oracle-feedback accuracy per (strategy, gamma), plus the zero-shot
    accuracy restricted to each strategy's flagged subset."""
    records = list(records)
    if not any(r.true_label is not None for r in records):
        raise ValidationError("strategy comparison requires a labeled stream")
    out: List[dict] = []
    for gamma in gammas:
        for strategy in strategies:
            run_cfg = cfg.replace(gamma=gamma, feedback_mode="oracle")
            report = run_once(records, spec, run_cfg, strategy=strategy,
                              seed=seed, window=window)
            out.append({
                "strategy": strategy,
                "gamma": gamma,
                "overall_acc": report.summary["overall_acc"],
                "zs_acc": report.summary["zs_acc"],
                "flagged_count": report.summary["flagged_count"],
                "flagged_zs_acc": report.summary["flagged_zs_acc"],
            })
    return out
