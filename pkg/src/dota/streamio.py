"""Bit-exact on-disk formats: embedding streams, classifier heads, checkpoints.

Stream and classifier files store 32-bit little-endian floats (the dominant
embedding-export convention); all in-memory computation is 64-bit. The
checkpoint wraps an npz payload with a magic header and a SHA-256 content
checksum so corruption is detected before any state is rebuilt.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .core import (AdaptConfig, ClassifierSpec, EmbeddingRecord, FormatError,
                   ValidationError)
from .report import PredictionRow
from .session import Session

STREAM_MAGIC = b"DEMB"
CLASSIFIER_MAGIC = b"DCLS"
CHECKPOINT_MAGIC = b"DCKP"
VERSION = 1

FLAG_LABELS = 1
FLAG_URIS = 2


@dataclass(frozen=True)
class StreamHeader:
    dim: int
    count: int
    has_labels: bool
    has_asset_uris: bool


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(
            f"truncated file: wanted {n} bytes for {what} at offset "
            f"{fh.tell() - len(data)}, got {len(data)}")
    return data


def _check_magic(fh, expected: bytes) -> None:
    magic = _read_exact(fh, 4, "magic")
    if magic != expected:
        raise FormatError(
            f"bad magic at offset 0: expected {expected!r}, got {magic!r}")
    version = struct.unpack("<I", _read_exact(fh, 4, "version"))[0]
    if version != VERSION:
        raise FormatError(f"unsupported version {version} at offset 4")


# ------------------------------------------------------------------ streams

def write_stream(path: str, records: Sequence[EmbeddingRecord], dim: int,
                 has_labels: Optional[bool] = None,
                 has_asset_uris: Optional[bool] = None) -> None:
    records = list(records)
    if has_labels is None:
        has_labels = any(r.true_label is not None for r in records)
    if has_asset_uris is None:
        has_asset_uris = any(r.asset_uri is not None for r in records)
    flags = (FLAG_LABELS if has_labels else 0) | (FLAG_URIS if has_asset_uris else 0)
    with open(path, "wb") as fh:
        fh.write(STREAM_MAGIC)
        fh.write(struct.pack("<IIQI", VERSION, dim, len(records), flags))
        for r in records:
            if r.embedding.shape != (dim,):
                raise ValidationError(
                    f"record {r.id!r} has dimension {r.embedding.shape[0]}, "
                    f"stream declares {dim}")
            ident = r.id.encode("utf-8")
            fh.write(struct.pack("<H", len(ident)))
            fh.write(ident)
            fh.write(r.embedding.astype("<f4").tobytes())
            if has_labels:
                fh.write(struct.pack("<i", -1 if r.true_label is None else r.true_label))
            if has_asset_uris:
                uri = (r.asset_uri or "").encode("utf-8")
                fh.write(struct.pack("<H", len(uri)))
                fh.write(uri)


def read_stream_header(path: str) -> StreamHeader:
    with open(path, "rb") as fh:
        _check_magic(fh, STREAM_MAGIC)
        dim, = struct.unpack("<I", _read_exact(fh, 4, "dim"))
        count, = struct.unpack("<Q", _read_exact(fh, 8, "count"))
        flags, = struct.unpack("<I", _read_exact(fh, 4, "flags"))
    return StreamHeader(dim=dim, count=count,
                        has_labels=bool(flags & FLAG_LABELS),
                        has_asset_uris=bool(flags & FLAG_URIS))


def read_stream(path: str) -> Tuple[StreamHeader, Iterator[EmbeddingRecord]]:
    """Header plus a constant-memory record iterator; records are validated
    and normalized on the way in."""
    header = read_stream_header(path)

    def _records() -> Iterator[EmbeddingRecord]:
        with open(path, "rb") as fh:
            fh.seek(4 + 4 + 4 + 8 + 4)
            seen = 0
            while True:
                pos = fh.tell()
                lead = fh.read(2)
                if not lead:
                    break
                if len(lead) != 2:
                    raise FormatError(f"truncated record header at offset {pos}")
                id_len, = struct.unpack("<H", lead)
                ident = _read_exact(fh, id_len, "record id").decode("utf-8")
                raw = _read_exact(fh, 4 * header.dim, f"embedding of {ident!r}")
                emb = np.frombuffer(raw, dtype="<f4").astype(np.float64)
                label = None
                if header.has_labels:
                    val, = struct.unpack("<i", _read_exact(fh, 4, "label"))
                    if val < -1:
                        raise FormatError(
                            f"label {val} below -1 at offset {fh.tell() - 4}")
                    label = None if val == -1 else val
                uri = None
                if header.has_asset_uris:
                    uri_len, = struct.unpack("<H", _read_exact(fh, 2, "uri length"))
                    text = _read_exact(fh, uri_len, "asset uri").decode("utf-8")
                    uri = text or None
                yield EmbeddingRecord.create(ident, emb, true_label=label,
                                             asset_uri=uri)
                seen += 1
            if seen != header.count:
                raise FormatError(
                    f"stream declares {header.count} records but {seen} present")

    return header, _records()


# --------------------------------------------------------------- classifier

def write_classifier(path: str, spec: ClassifierSpec) -> None:
    with open(path, "wb") as fh:
        fh.write(CLASSIFIER_MAGIC)
        fh.write(struct.pack("<IIIf", VERSION, spec.k, spec.dim,
                             spec.temperature))
        for name, w in zip(spec.class_names, spec.weights):
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(w.astype("<f4").tobytes())


def read_classifier(path: str) -> ClassifierSpec:
    with open(path, "rb") as fh:
        _check_magic(fh, CLASSIFIER_MAGIC)
        k, dim = struct.unpack("<II", _read_exact(fh, 8, "k/dim"))
        tau, = struct.unpack("<f", _read_exact(fh, 4, "temperature"))
        names: List[str] = []
        weights = np.empty((k, dim))
        for i in range(k):
            name_len, = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            names.append(_read_exact(fh, name_len, "class name").decode("utf-8"))
            raw = _read_exact(fh, 4 * dim, f"weights of class {i}")
            weights[i] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        trailing = fh.read(1)
        if trailing:
            raise FormatError(
                f"unexpected trailing bytes at offset {fh.tell() - 1}")
    return ClassifierSpec.create(names, weights, float(tau))


# --------------------------------------------------------------- checkpoint

def write_checkpoint(session: Session, path: str) -> None:
    """Serialize the full session (estimator, score history, RNG, log)."""
    with session.lock:
        state = session.gda
        arrays = {
            "config_json": np.array(json.dumps(session.config_echo())),
            "class_names_json": np.array(json.dumps(list(session.spec.class_names))),
            "spec_weights": np.asarray(session.spec.weights),
            "temperature": np.array(session.spec.temperature),
            "means": state.means,
            "counts": state.counts,
            "precision": state.precision,
            "step": np.array(state.step, dtype=np.int64),
            "pooled_mass": np.array(state.pooled_mass),
            "scores": np.array(session.history.scores, dtype=np.float64),
            "rng_state_json": np.array(json.dumps(session.history.rng_state(),
                                                  default=int)),
            "fusion_count": np.array(session.fusion_count, dtype=np.int64),
            "stream_index": np.array(session.stream_index, dtype=np.int64),
            "rows_json": np.array(json.dumps(
                [r.to_json_dict() for r in session.rows])),
        }
        if state.covs is not None:
            arrays["covs"] = state.covs
        if state.pooled_cov is not None:
            arrays["pooled_cov"] = state.pooled_cov
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    payload = buf.getvalue()
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(digest)
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)


def read_checkpoint(path: str) -> Session:
    with open(path, "rb") as fh:
        _check_magic(fh, CHECKPOINT_MAGIC)
        digest = _read_exact(fh, 32, "checksum")
        size, = struct.unpack("<Q", _read_exact(fh, 8, "payload length"))
        payload = _read_exact(fh, size, "payload")
        trailing = fh.read(1)
        if trailing:
            raise FormatError(
                f"unexpected trailing bytes at offset {fh.tell() - 1}")
    if hashlib.sha256(payload).digest() != digest:
        raise FormatError("checkpoint checksum mismatch: file is corrupt")
    with np.load(io.BytesIO(payload)) as z:
        cfg_d = json.loads(str(z["config_json"]))
        strategy = cfg_d.pop("strategy")
        seed = cfg_d.pop("seed")
        cfg = AdaptConfig(**cfg_d)
        # Rebuild the spec verbatim: re-normalizing the stored unit rows can
        # shift the last bit and break bit-exact resume.
        weights = z["spec_weights"].copy()
        weights.flags.writeable = False
        spec = ClassifierSpec(
            class_names=tuple(json.loads(str(z["class_names_json"]))),
            weights=weights, temperature=float(z["temperature"]))
        session = Session(spec, cfg, strategy=strategy, seed=seed)
        state = session.gda
        state.means = z["means"].copy()
        state.counts = z["counts"].copy()
        state.precision = z["precision"].copy()
        state.step = int(z["step"])
        state.pooled_mass = float(z["pooled_mass"])
        if "covs" in z.files:
            state.covs = z["covs"].copy()
        if "pooled_cov" in z.files:
            state.pooled_cov = z["pooled_cov"].copy()
        session.history.scores = [float(s) for s in z["scores"]]
        session.history._sorted = sorted(session.history.scores)
        session.history.set_rng_state(json.loads(str(z["rng_state_json"])))
        session.fusion_count = int(z["fusion_count"])
        session.stream_index = int(z["stream_index"])
        session.rows = [PredictionRow.from_json_dict(d)
                        for d in json.loads(str(z["rows_json"]))]
    return session
