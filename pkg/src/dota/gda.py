"""Online Gaussian discriminant estimation.

State holds per-class means and confidence counts plus covariance storage in
one of two backends:

* ``per-class``: K full covariance matrices, updated with the weighted
  running-moment recursion (the outer product uses the *previous* mean).
* ``pooled``: one accumulator fed only by each sample's argmax class, a
  memory-saving approximation for large K.

Scoring always goes through a single shared precision matrix: the class
covariances are averaged, shrunk toward the identity, and inverted once.
The per-class log-determinant term is a class constant under the shared
covariance and cancels in the softmax, so it is never computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels
from .core import (AdaptConfig, ClassifierSpec, NumericalError, Posterior,
                   ValidationError, softmax, validate_config)


@dataclass
class Responsibilities:
    """Sparse per-class estimation weights for one sample.

    indices are ascending class ids; values are the matching weights in [0, 1].
    An empty pair is legal and makes the update a no-op.
    """

    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def one_hot(cls, label: int) -> "Responsibilities":
        return cls(indices=np.array([label], dtype=np.int64),
                   values=np.array([1.0]))

    @property
    def argmax_class(self) -> Optional[int]:
        if self.indices.size == 0:
            return None
        return int(self.indices[int(np.argmax(self.values))])

    def dense(self, k: int) -> np.ndarray:
        out = np.zeros(k)
        out[self.indices] = self.values
        return out


def truncate_responsibilities(p: Posterior, cfg: AdaptConfig) -> Responsibilities:
    """Keep entries at or above the floor; dropped entries count as exactly 0.

    Entries are not renormalized: the kept weights are the raw posterior
    probabilities.
    """
    keep = np.nonzero(p.probs >= cfg.responsibility_floor)[0]
    return Responsibilities(indices=keep.astype(np.int64),
                            values=p.probs[keep].copy())


@dataclass
class GdaState:
    """Adaptable distribution parameters plus the cached shared precision."""

    means: np.ndarray             # (K, D)
    counts: np.ndarray            # (K,), cumulative confidence mass incl. the prior 1
    cov_backend: str
    covs: Optional[np.ndarray]    # (K, D, D) for per-class, else None
    pooled_cov: Optional[np.ndarray]   # (D, D) accumulator for pooled, else None
    pooled_mass: float
    precision: np.ndarray         # (D, D) cached shared precision
    step: int
    cfg: AdaptConfig

    @property
    def k(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def init_state(spec: ClassifierSpec, cfg: AdaptConfig) -> GdaState:
    """Start each class at its zero-shot weight with isotropic sigma2 covariance."""
    validate_config(cfg)
    k, d = spec.k, spec.dim
    means = spec.weights.copy()
    counts = np.ones(k)
    eye = np.eye(d)
    if cfg.cov_backend == "per-class":
        covs = np.tile(cfg.sigma2 * eye, (k, 1, 1))
        pooled_cov, pooled_mass = None, 0.0
    else:
        covs = None
        pooled_cov, pooled_mass = cfg.sigma2 * eye.copy(), 1.0
    state = GdaState(means=means, counts=counts, cov_backend=cfg.cov_backend,
                     covs=covs, pooled_cov=pooled_cov, pooled_mass=pooled_mass,
                     precision=eye, step=0, cfg=cfg)
    refresh_precision(state)
    return state


def shared_covariance(state: GdaState) -> np.ndarray:
    """Unweighted average of the class covariances (pooled: accumulator / mass)."""
    if state.cov_backend == "per-class":
        return _kernels.shared_cov(state.covs)
    return state.pooled_cov / state.pooled_mass


def refresh_precision(state: GdaState) -> GdaState:
    """Recompute the cached precision: one inversion of the shrunk shared covariance."""
    cfg = state.cfg
    sigma_bar = shared_covariance(state)
    try:
        prec = _kernels.shrink_invert(sigma_bar, cfg.epsilon)
    except np.linalg.LinAlgError as exc:
        shrunk = (1.0 - cfg.epsilon) * sigma_bar + cfg.epsilon * np.eye(state.dim)
        cond = float(np.linalg.cond(shrunk))
        raise NumericalError(
            f"shrunk covariance inversion failed (cond={cond:.3e})") from exc
    if not np.all(np.isfinite(prec)):
        shrunk = (1.0 - cfg.epsilon) * sigma_bar + cfg.epsilon * np.eye(state.dim)
        cond = float(np.linalg.cond(shrunk))
        raise NumericalError(
            f"shrunk covariance produced a non-finite precision (cond={cond:.3e})")
    state.precision = prec
    return state


def update(state: GdaState, x: np.ndarray, r: Responsibilities) -> GdaState:
    """One streaming step: fold the sample into every class r touches.

    The covariance numerator uses the previous mean in both outer-product
    factors, and counts accumulate the responsibility mass. The cached
    precision is refreshed whenever step is a multiple of the refresh
    interval.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.dim,):
        raise ValidationError(
            f"sample has shape {x.shape}, state expects ({state.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValidationError("sample contains NaN or Inf")
    cfg = state.cfg
    idx = np.ascontiguousarray(r.indices, dtype=np.int64)
    wts = np.ascontiguousarray(r.values, dtype=np.float64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= state.k:
            raise ValidationError("responsibility index out of range")
        if state.cov_backend == "per-class":
            _kernels.update_perclass(state.means, state.covs, state.counts,
                                     x, idx, wts, cfg.freeze_covariance)
        else:
            target = r.argmax_class
            added = _kernels.update_pooled(state.means, state.counts,
                                           state.pooled_cov, x, idx, wts,
                                           target, cfg.freeze_covariance)
            state.pooled_mass += float(added)
    state.step += 1
    if state.step % cfg.precision_refresh_interval == 0:
        refresh_precision(state)
    return state


def batch_estimate(samples: List[Tuple[np.ndarray, Responsibilities]],
                   spec: ClassifierSpec, cfg: AdaptConfig) -> GdaState:
    """Closed-form weighted estimate over a full batch, blended with the
    initialization pseudo-observation (weight vector at mass 1, sigma2*I).

    This is the oracle the streaming path is tested against: means agree with
    the online recursion for any ordering; covariances agree exactly only for
    a single sample (the online form uses stale means).
    """
    validate_config(cfg)
    if not samples:
        raise ValidationError("batch_estimate requires a nonempty sample list")
    k, d = spec.k, spec.dim
    eye = np.eye(d)
    mean_num = spec.weights.copy()          # 1 * w_k
    mass = np.ones(k)
    cov_num = np.tile(cfg.sigma2 * eye, (k, 1, 1))   # 1 * sigma2 I
    for x, r in samples:
        x = np.asarray(x, dtype=np.float64)
        for j in range(r.indices.size):
            c = int(r.indices[j])
            w = float(r.values[j])
            dvec = x - spec.weights[c]
            mean_num[c] = mean_num[c] + w * x
            cov_num[c] = cov_num[c] + w * np.outer(dvec, dvec)
            mass[c] += w
    means = mean_num / mass[:, None]
    covs = cov_num / mass[:, None, None]
    covs = (covs + covs.transpose(0, 2, 1)) / 2.0
    state = GdaState(means=means, counts=mass, cov_backend="per-class",
                     covs=covs, pooled_cov=None, pooled_mass=0.0,
                     precision=np.eye(d), step=len(samples), cfg=cfg)
    refresh_precision(state)
    return state


def discriminant_scores(state: GdaState, x: np.ndarray) -> np.ndarray:
    """Negative half squared Mahalanobis distance to each class mean."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.dim,):
        raise ValidationError(
            f"sample has shape {x.shape}, state expects ({state.dim},)")
    return _kernels.discriminant(state.means, state.precision, x)


def gda_posterior(state: GdaState, x: np.ndarray) -> Posterior:
    return Posterior.from_probs(softmax(discriminant_scores(state, x)))
