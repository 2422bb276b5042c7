import numpy as np
import pytest

from dota.core import AdaptConfig, ClassifierSpec, EmbeddingRecord, FormatError
from dota.session import Session
from dota.streamio import (read_checkpoint, read_classifier, read_stream,
                           read_stream_header, write_checkpoint,
                           write_classifier, write_stream)
from dota.synth import SynthSpec, generate_arrays


def sample_records():
    rng = np.random.default_rng(0)
    return [
        EmbeddingRecord.create("first", rng.normal(size=6), true_label=0,
                               asset_uri="file:///a.png"),
        EmbeddingRecord.create("zwei-\u00fcml\u00e4ut", rng.normal(size=6),
                               true_label=2),
        EmbeddingRecord.create("third", rng.normal(size=6)),
    ]


class TestStreamFile:
    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "s.demb")
        records = sample_records()
        write_stream(path, records, dim=6)
        header, it = read_stream(path)
        back = list(it)
        assert header.count == 3 and header.dim == 6
        assert header.has_labels and header.has_asset_uris
        for orig, got in zip(records, back):
            assert got.id == orig.id
            assert got.true_label == orig.true_label
            assert got.asset_uri == orig.asset_uri
            # storage is float32; ingestion renormalizes
            np.testing.assert_allclose(got.embedding, orig.embedding,
                                       atol=1e-6)
            np.testing.assert_allclose(np.linalg.norm(got.embedding), 1.0,
                                       atol=1e-9)

    def test_second_generation_round_trip_is_stable(self, tmp_path):
        p1, p2 = str(tmp_path / "a.demb"), str(tmp_path / "b.demb")
        write_stream(p1, sample_records(), dim=6)
        _, it = read_stream(p1)
        first = list(it)
        write_stream(p2, first, dim=6)
        _, it2 = read_stream(p2)
        second = list(it2)
        for a, b in zip(first, second):
            np.testing.assert_allclose(b.embedding, a.embedding, atol=1e-9)

    def test_reader_is_lazy(self, tmp_path):
        path = str(tmp_path / "s.demb")
        write_stream(path, sample_records(), dim=6)
        _, it = read_stream(path)
        assert next(it).id == "first"  # no exhaustion required

    def test_truncated_body_names_offset(self, tmp_path):
        path = str(tmp_path / "s.demb")
        write_stream(path, sample_records(), dim=6)
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:len(raw) - 7])
        _, it = read_stream(path)
        with pytest.raises(FormatError, match="offset"):
            list(it)

    def test_bad_magic(self, tmp_path):
        path = str(tmp_path / "s.demb")
        with open(path, "wb") as fh:
            fh.write(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            read_stream_header(path)

    def test_wrong_version(self, tmp_path):
        path = str(tmp_path / "s.demb")
        write_stream(path, sample_records(), dim=6)
        raw = bytearray(open(path, "rb").read())
        raw[4] = 99
        open(path, "wb").write(bytes(raw))
        with pytest.raises(FormatError, match="version"):
            read_stream_header(path)

    def test_count_mismatch_detected(self, tmp_path):
        path = str(tmp_path / "s.demb")
        write_stream(path, sample_records(), dim=6)
        raw = bytearray(open(path, "rb").read())
        raw[12] = 9  # declared count low byte
        open(path, "wb").write(bytes(raw))
        _, it = read_stream(path)
        with pytest.raises(FormatError, match="declares"):
            list(it)

    def test_random_round_trips(self, tmp_path):
        rng = np.random.default_rng(4)
        for trial in range(10):
            d = int(rng.integers(2, 20))
            n = int(rng.integers(1, 30))
            with_labels = bool(rng.integers(2))
            with_uris = bool(rng.integers(2))
            records = [
                EmbeddingRecord.create(
                    f"r{trial}-{i}", rng.normal(size=d),
                    true_label=int(rng.integers(5)) if with_labels else None,
                    asset_uri=f"u://{i}" if with_uris else None)
                for i in range(n)]
            path = str(tmp_path / f"t{trial}.demb")
            write_stream(path, records, dim=d)
            header, it = read_stream(path)
            back = list(it)
            assert [r.id for r in back] == [r.id for r in records]
            assert [r.true_label for r in back] == [r.true_label for r in records]
            assert [r.asset_uri for r in back] == [r.asset_uri for r in records]


class TestClassifierFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        spec = ClassifierSpec.create(["alpha", "\u00df-class", "gamma"],
                                     rng.normal(size=(3, 5)), 0.07)
        path = str(tmp_path / "c.dcls")
        write_classifier(path, spec)
        back = read_classifier(path)
        assert back.class_names == spec.class_names
        assert back.temperature == pytest.approx(spec.temperature, rel=1e-6)
        np.testing.assert_allclose(back.weights, spec.weights, atol=1e-6)

    def test_trailing_garbage_rejected(self, tmp_path):
        rng = np.random.default_rng(1)
        spec = ClassifierSpec.create(["a", "b"], rng.normal(size=(2, 3)), 0.1)
        path = str(tmp_path / "c.dcls")
        write_classifier(path, spec)
        with open(path, "ab") as fh:
            fh.write(b"x")
        with pytest.raises(FormatError, match="trailing"):
            read_classifier(path)


class TestCheckpoint:
    def _session_and_records(self, n=60):
        spec = SynthSpec(k=3, d=8, n_samples=n, seed=11, cone_deg=50.0)
        records, _, truth = generate_arrays(spec)
        cls = ClassifierSpec.create([f"c{i}" for i in range(3)], truth.weights,
                                    truth.spec.temperature)
        return records, cls

    def test_resume_continues_bit_identically(self, tmp_path):
        records, cls = self._session_and_records()
        cfg = AdaptConfig(gamma=0.1)

        full = Session(cls, cfg, seed=3)
        full_report = full.run_stream(records)

        part = Session(cls, cfg, seed=3)
        part.run_stream(records, stop_after=25)
        ckpt = str(tmp_path / "mid.ckpt")
        write_checkpoint(part, ckpt)

        resumed = read_checkpoint(ckpt)
        assert resumed.stream_index == 25
        resumed.run_stream(records[25:])
        a = [r.to_json_dict() for r in full_report.rows]
        b = [r.to_json_dict() for r in resumed.rows]
        assert a == b

    def test_checkpoint_restores_arrays_exactly(self, tmp_path):
        records, cls = self._session_and_records(n=40)
        session = Session(cls, AdaptConfig(cov_backend="pooled"), seed=1)
        session.run_stream(records)
        ckpt = str(tmp_path / "s.ckpt")
        write_checkpoint(session, ckpt)
        back = read_checkpoint(ckpt)
        np.testing.assert_array_equal(back.gda.means, session.gda.means)
        np.testing.assert_array_equal(back.gda.counts, session.gda.counts)
        np.testing.assert_array_equal(back.gda.precision, session.gda.precision)
        np.testing.assert_array_equal(back.gda.pooled_cov, session.gda.pooled_cov)
        assert back.gda.pooled_mass == session.gda.pooled_mass
        assert back.history.scores == session.history.scores
        assert back.history.rng_state() == session.history.rng_state()

    def test_corruption_detected(self, tmp_path):
        records, cls = self._session_and_records(n=10)
        session = Session(cls, AdaptConfig(), seed=1)
        session.run_stream(records)
        ckpt = str(tmp_path / "s.ckpt")
        write_checkpoint(session, ckpt)
        raw = bytearray(open(ckpt, "rb").read())
        raw[60] ^= 0xFF
        open(ckpt, "wb").write(bytes(raw))
        with pytest.raises(FormatError, match="checksum|truncated"):
            read_checkpoint(ckpt)
