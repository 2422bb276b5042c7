"""Seeded synthetic streams with ground truth, plus the exact-posterior oracle.

Geometry: class means sit at equal angles from a random base direction, each
along its own orthonormal tangent, so every pair of classes is separated by
the same angle (cone_deg controls it). In anisotropic mode the covariance
(shared by all classes) has its principal axes tilted 45 degrees between the
span of the means and its orthogonal complement, with a large/small
eigenvalue pair per tilted axis. Class separation therefore lives along
low-variance directions while most of the within-class scatter is oblique to
them; plain cosine scoring is blind to that structure, which is exactly what
the adapted metric recovers. Exported zero-shot weights are the true means
rotated by a configurable angle in a random plane, modelling the train/test
gap.

The generator's default temperature (0.1) is calibrated so the zero-shot
softmax confidences at this desk-scale geometry spread over roughly the same
range as a large vision-language head produces on real data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import ClassifierSpec, EmbeddingRecord, ValidationError
from .streamio import read_stream, write_classifier, write_stream

DEFAULT_TAU = 0.1
DEFAULT_CONE_DEG = 58.0
DEFAULT_EIG_LO = 1e-3
DEFAULT_EIG_HI = 0.18
DEFAULT_EIG_MID = 0.01
DEFAULT_ISO_EIG = 2e-3


@dataclass(frozen=True)
class SynthSpec:
    k: int = 5
    d: int = 16
    n_samples: int = 5000
    seed: int = 0
    weight_perturbation_deg: float = 25.0
    anisotropic: bool = True
    cone_deg: float = DEFAULT_CONE_DEG
    eig_lo: float = DEFAULT_EIG_LO
    eig_hi: float = DEFAULT_EIG_HI
    eig_mid: float = DEFAULT_EIG_MID
    iso_eig: float = DEFAULT_ISO_EIG
    temperature: float = DEFAULT_TAU
    class_balance: Optional[Tuple[float, ...]] = None

    def validate(self) -> "SynthSpec":
        if self.k < 2:
            raise ValidationError("k must be >= 2")
        if self.d < self.k + 1:
            raise ValidationError("d must be >= k + 1 so the mean frame fits")
        if self.anisotropic and self.d < 2 * (self.k + 1):
            raise ValidationError(
                "anisotropic mode pairs each span direction with an orthogonal "
                "one and needs d >= 2(k + 1)")
        if not (0 <= self.weight_perturbation_deg <= 90):
            raise ValidationError("weight_perturbation_deg must lie in [0, 90]")
        if self.n_samples < 1:
            raise ValidationError("n_samples must be positive")
        for name in ("eig_lo", "eig_hi", "eig_mid", "iso_eig", "temperature"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"{name} must be > 0")
        if self.class_balance is not None:
            if len(self.class_balance) != self.k:
                raise ValidationError("class_balance must have k entries")
            if min(self.class_balance) <= 0:
                raise ValidationError("class_balance entries must be positive")
        return self


@dataclass
class SynthTruth:
    """Ground-truth parameters for oracle checks."""

    spec: SynthSpec
    means: np.ndarray        # (K, D) unit rows
    covs: np.ndarray         # (K, D, D) SPD
    weights: np.ndarray      # (K, D) exported zero-shot weights


def _rotate_toward(v: np.ndarray, raw: np.ndarray, deg: float) -> np.ndarray:
    """Rotate unit v by deg degrees in the plane spanned by v and raw."""
    u = raw - (raw @ v) * v
    norm = np.linalg.norm(u)
    if norm == 0:
        return v.copy()
    u = u / norm
    theta = np.deg2rad(deg)
    return np.cos(theta) * v + np.sin(theta) * u


def build_truth(spec: SynthSpec) -> Tuple[SynthTruth, np.random.Generator]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    k, d = spec.k, spec.d
    # equiangular placement: one orthonormal tangent per class around a
    # shared base, so all pairwise class angles are identical
    frame, _ = np.linalg.qr(rng.normal(size=(d, k + 1)))
    base, tangents = frame[:, 0], frame[:, 1:]
    theta = np.deg2rad(spec.cone_deg)
    means = np.array([np.cos(theta) * base + np.sin(theta) * tangents[:, i]
                      for i in range(k)])
    U, s, _ = np.linalg.svd(means.T, full_matrices=True)
    span_dim = int((s > 1e-9).sum())
    span, perp = U[:, :span_dim], U[:, span_dim:]
    if spec.anisotropic:
        vecs: List[np.ndarray] = []
        eigs: List[float] = []
        for i in range(span_dim):
            u, v = span[:, i], perp[:, i]
            vecs.append((u + v) / np.sqrt(2))
            eigs.append(spec.eig_hi * float(np.exp(rng.uniform(-0.2, 0.2))))
            vecs.append((u - v) / np.sqrt(2))
            eigs.append(spec.eig_lo * float(np.exp(rng.uniform(-0.2, 0.2))))
        for i in range(span_dim, d - span_dim):
            vecs.append(perp[:, i])
            eigs.append(spec.eig_mid * float(np.exp(rng.uniform(-0.4, 0.4))))
        basis = np.array(vecs).T
        sigma = (basis * np.array(eigs)) @ basis.T
        sigma = (sigma + sigma.T) / 2.0
    else:
        sigma = spec.iso_eig * np.eye(d)
    covs = np.tile(sigma, (k, 1, 1))
    try:
        np.linalg.cholesky(covs)
    except np.linalg.LinAlgError as exc:
        raise ValidationError("generated covariance is not SPD") from exc
    weights = np.array([_rotate_toward(means[i], rng.normal(size=d),
                                       spec.weight_perturbation_deg)
                        for i in range(k)])
    return SynthTruth(spec=spec, means=means, covs=covs, weights=weights), rng


def generate_arrays(spec: SynthSpec, return_raw: bool = False):
    """(records, labels, truth) without touching disk.

    With return_raw the pre-normalization draws come back too, for sanity
    checks against the generating parameters.
    """
    truth, rng = build_truth(spec)
    k, d, n = spec.k, spec.d, spec.n_samples
    if spec.class_balance is None:
        labels = rng.integers(0, k, size=n)
    else:
        p = np.asarray(spec.class_balance, dtype=np.float64)
        labels = rng.choice(k, size=n, p=p / p.sum())
    chol = np.linalg.cholesky(truth.covs)
    noise = rng.normal(size=(n, d))
    raw = np.einsum("nde,ne->nd", chol[labels], noise) + truth.means[labels]
    records = [EmbeddingRecord.create(f"synth-{spec.seed}-{i:06d}", raw[i],
                                      true_label=int(labels[i]))
               for i in range(n)]
    if return_raw:
        return records, labels, truth, raw
    return records, labels, truth


def classifier_from_truth(truth: SynthTruth) -> ClassifierSpec:
    names = [f"class_{i:03d}" for i in range(truth.spec.k)]
    return ClassifierSpec.create(names, truth.weights, truth.spec.temperature)


def generate(spec: SynthSpec, out_prefix: str) -> dict:
    """Write <prefix>.demb, <prefix>.dcls and <prefix>.truth.json."""
    records, _, truth = generate_arrays(spec)
    stream_path = f"{out_prefix}.demb"
    classifier_path = f"{out_prefix}.dcls"
    truth_path = f"{out_prefix}.truth.json"
    write_stream(stream_path, records, dim=spec.d)
    write_classifier(classifier_path, classifier_from_truth(truth))
    manifest = {
        "spec": asdict(spec),
        "means": truth.means.tolist(),
        "covs": truth.covs.tolist(),
        "weights": truth.weights.tolist(),
    }
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh)
    return {"stream": stream_path, "classifier": classifier_path,
            "truth": truth_path}


def load_truth(path: str) -> SynthTruth:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    spec_d = dict(manifest["spec"])
    if spec_d.get("class_balance") is not None:
        spec_d["class_balance"] = tuple(spec_d["class_balance"])
    spec = SynthSpec(**spec_d)
    return SynthTruth(spec=spec,
                      means=np.asarray(manifest["means"]),
                      covs=np.asarray(manifest["covs"]),
                      weights=np.asarray(manifest["weights"]))


def oracle_log_posteriors(x: np.ndarray, truth: SynthTruth) -> np.ndarray:
    """Unnormalized log posterior per class under the true parameters with a
    uniform prior (which therefore drops out)."""
    k = truth.spec.k
    out = np.empty(k)
    for j in range(k):
        diff = x - truth.means[j]
        prec = np.linalg.inv(truth.covs[j])
        _, logdet = np.linalg.slogdet(truth.covs[j])
        out[j] = -0.5 * float(diff @ prec @ diff) - 0.5 * logdet
    return out


def bayes_oracle_accuracy(records, truth: SynthTruth) -> float:
    """Accuracy of the exact posterior classifier on the (normalized) stream.

    records may be a path to a .demb file or an iterable of EmbeddingRecord.
    """
    if isinstance(records, str):
        header, it = read_stream(records)
        if header.dim != truth.spec.d:
            raise ValidationError(
                f"stream dimension {header.dim} does not match manifest "
                f"dimension {truth.spec.d}")
        records = it
    k, d = truth.spec.k, truth.spec.d
    precs = np.linalg.inv(truth.covs)
    logdets = np.array([np.linalg.slogdet(c)[1] for c in truth.covs])
    total = 0
    hits = 0
    for rec in records:
        if rec.true_label is None:
            raise ValidationError("oracle accuracy requires labeled records")
        if rec.true_label >= k:
            raise ValidationError(
                f"record label {rec.true_label} outside manifest classes")
        diff = truth.means - rec.embedding
        scores = -0.5 * np.einsum("kd,kde,ke->k", diff, precs, diff) \
            - 0.5 * logdets
        hits += int(int(np.argmax(scores)) == rec.true_label)
        total += 1
    if total == 0:
        raise ValidationError("empty stream")
    return hits / total
