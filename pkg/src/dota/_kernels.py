"""Hot per-sample kernels with a numba fast path and a pure-numpy fallback.

Backend selection: set DOTA_NUMBA=0 (or "false"/"off") to force the numpy
path; otherwise numba is used when importable. Both implementations keep the
same operation order so the single-step update is bit-identical to the batch
formula in either backend.
"""

from __future__ import annotations

import os

import numpy as np


# ---------------------------------------------------------------- numpy path

def _update_perclass_numpy(means, covs, counts, x, idx, wts, freeze_cov):
    """Weighted moment update for the selected classes, previous-mean outer product."""
    for j in range(idx.shape[0]):
        k = idx[j]
        w = wts[j]
        c = counts[k]
        denom = c + w
        d = x - means[k]
        if not freeze_cov:
            covs[k] = (c * covs[k] + w * np.outer(d, d)) / denom
            covs[k] = (covs[k] + covs[k].T) / 2.0
        means[k] = (c * means[k] + w * x) / denom
        counts[k] = denom


def _update_pooled_numpy(means, counts, pooled, x, idx, wts, target, freeze_cov):
    """Pooled-accumulator update: only the argmax class contributes its outer product."""
    added = 0.0
    for j in range(idx.shape[0]):
        k = idx[j]
        w = wts[j]
        if k == target and not freeze_cov:
            d = x - means[k]
            pooled += w * np.outer(d, d)
            added = w
        c = counts[k]
        denom = c + w
        means[k] = (c * means[k] + w * x) / denom
        counts[k] = denom
    return added


def _shared_cov_numpy(covs):
    out = covs.mean(axis=0)
    return (out + out.T) / 2.0


def _shrink_invert_numpy(sigma_bar, eps):
    d = sigma_bar.shape[0]
    shrunk = (1.0 - eps) * sigma_bar + eps * np.eye(d)
    prec = np.linalg.inv(shrunk)
    return (prec + prec.T) / 2.0


def _discriminant_numpy(means, precision, x):
    diff = means - x
    return -0.5 * np.einsum("kd,de,ke->k", diff, precision, diff)


def _softmax_numpy(logits):
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


_NUMPY_IMPL = {
    "update_perclass": _update_perclass_numpy,
    "update_pooled": _update_pooled_numpy,
    "shared_cov": _shared_cov_numpy,
    "shrink_invert": _shrink_invert_numpy,
    "discriminant": _discriminant_numpy,
    "softmax": _softmax_numpy,
}


# ---------------------------------------------------------------- numba path

def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def update_perclass(means, covs, counts, x, idx, wts, freeze_cov):
        # covariances stay exactly symmetric, so only the upper triangle is
        # computed and the value is mirrored (free symmetrization)
        D = means.shape[1]
        for j in range(idx.shape[0]):
            k = idx[j]
            w = wts[j]
            c = counts[k]
            denom = c + w
            if not freeze_cov:
                for a in range(D):
                    da = x[a] - means[k, a]
                    for b in range(a, D):
                        db = x[b] - means[k, b]
                        v = (c * covs[k, a, b] + w * (da * db)) / denom
                        covs[k, a, b] = v
                        covs[k, b, a] = v
            for a in range(D):
                means[k, a] = (c * means[k, a] + w * x[a]) / denom
            counts[k] = denom

    @njit(cache=True)
    def update_pooled(means, counts, pooled, x, idx, wts, target, freeze_cov):
        D = means.shape[1]
        added = 0.0
        for j in range(idx.shape[0]):
            k = idx[j]
            w = wts[j]
            if k == target and not freeze_cov:
                for a in range(D):
                    da = x[a] - means[k, a]
                    for b in range(D):
                        db = x[b] - means[k, b]
                        pooled[a, b] += w * (da * db)
                added = w
            c = counts[k]
            denom = c + w
            for a in range(D):
                means[k, a] = (c * means[k, a] + w * x[a]) / denom
            counts[k] = denom
        return added

    @njit(cache=True)
    def shared_cov(covs):
        K, D, _ = covs.shape
        out = np.zeros((D, D))
        for k in range(K):
            out += covs[k]
        out /= K
        return (out + out.T) / 2.0

    @njit(cache=True)
    def shrink_invert(sigma_bar, eps):
        d = sigma_bar.shape[0]
        shrunk = (1.0 - eps) * sigma_bar + eps * np.eye(d)
        prec = np.linalg.inv(shrunk)
        return (prec + prec.T) / 2.0

    @njit(cache=True)
    def discriminant(means, precision, x):
        K, D = means.shape
        f = np.empty(K)
        d = np.empty(D)
        for k in range(K):
            for a in range(D):
                d[a] = means[k, a] - x[a]
            acc = 0.0
            for a in range(D):
                row = 0.0
                for b in range(D):
                    row += precision[a, b] * d[b]
                acc += d[a] * row
            f[k] = -0.5 * acc
        return f

    @njit(cache=True)
    def softmax_vec(logits):
        k = logits.shape[0]
        m = logits[0]
        for i in range(1, k):
            if logits[i] > m:
                m = logits[i]
        out = np.empty(k)
        total = 0.0
        for i in range(k):
            out[i] = np.exp(logits[i] - m)
            total += out[i]
        for i in range(k):
            out[i] /= total
        return out

    return {
        "update_perclass": update_perclass,
        "update_pooled": update_pooled,
        "shared_cov": shared_cov,
        "shrink_invert": shrink_invert,
        "discriminant": discriminant,
        "softmax": softmax_vec,
    }


def _want_numba() -> bool:
    flag = os.environ.get("DOTA_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


BACKEND = "numpy"
_IMPL = _NUMPY_IMPL
if _want_numba():
    try:
        _IMPL = _build_numba_impl()
        BACKEND = "numba"
    except ImportError:
        pass

update_perclass = _IMPL["update_perclass"]
update_pooled = _IMPL["update_pooled"]
shared_cov = _IMPL["shared_cov"]
shrink_invert = _IMPL["shrink_invert"]
discriminant = _IMPL["discriminant"]
softmax = _IMPL["softmax"]


def available_backends() -> dict:
    """All importable implementations, for tests and benchmarks."""
    out = {"numpy": _NUMPY_IMPL}
    try:
        out["numba"] = _build_numba_impl()
    except ImportError:
        pass
    return out
