import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from dota.core import AdaptConfig, ClassifierSpec
from dota.serve import SessionRunner, create_app
from dota.synth import SynthSpec, classifier_from_truth, generate_arrays


def make_runner(feedback="human", gamma=0.3, n=30, seed=13):
    spec = SynthSpec(k=3, d=8, n_samples=n, seed=seed, cone_deg=50.0)
    records, _, truth = generate_arrays(spec)
    cls = classifier_from_truth(truth)
    cfg = AdaptConfig(gamma=gamma, feedback_mode=feedback)
    return SessionRunner(cls, cfg, records, seed=seed), records


def wait_for(predicate, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(0.01)
    return False


def wait_for_pending(client, sid, timeout=10.0):
    box = {}

    def poll():
        r = client.get(f"/api/v1/sessions/{sid}/pending")
        if r.status_code == 200:
            box["req"] = r.json()
            return True
        return False

    assert wait_for(poll, timeout), "no pending request appeared"
    return box["req"]


class TestHumanLoop:
    def test_poll_label_drain_cycle(self):
        runner, records = make_runner()
        app = create_app(runner)
        client = TestClient(app)
        sid = runner.session_id

        sessions = client.get("/api/v1/sessions").json()
        assert sessions[0]["session_id"] == sid
        assert sessions[0]["feedback_mode"] == "human"

        classes = client.get(f"/api/v1/sessions/{sid}/classes").json()
        assert classes["class_names"] == ["class_000", "class_001", "class_002"]

        runner.start()
        pending = wait_for_pending(client, sid)
        assert len(pending["topk"]) == 3
        assert pending["topk"][0]["fused_prob"] >= pending["topk"][-1]["fused_prob"]

        by_id = {r.id: r for r in records}
        label = by_id[pending["sample_id"]].true_label
        resp = client.post(f"/api/v1/sessions/{sid}/label",
                           json={"sample_id": pending["sample_id"],
                                 "label_index": label})
        assert resp.status_code == 200

        # keep answering until the stream finishes
        def finished():
            r = client.get(f"/api/v1/sessions/{sid}/pending")
            if r.status_code == 200:
                req = r.json()
                client.post(f"/api/v1/sessions/{sid}/label",
                            json={"sample_id": req["sample_id"],
                                  "label_index": by_id[req["sample_id"]].true_label})
            return client.get("/api/v1/sessions").json()[0]["status"] == "finished"

        assert wait_for(finished, timeout=30)
        metrics = client.get(f"/api/v1/sessions/{sid}/metrics").json()
        assert metrics["summary"]["n"] == len(records)
        assert metrics["summary"]["flagged_count"] >= 1

    def test_conflict_and_validation_paths(self):
        runner, records = make_runner()
        app = create_app(runner)
        client = TestClient(app)
        sid = runner.session_id
        runner.start()
        pending = wait_for_pending(client, sid)

        stale = client.post(f"/api/v1/sessions/{sid}/label",
                            json={"sample_id": "not-the-one", "label_index": 0})
        assert stale.status_code == 409

        invalid = client.post(f"/api/v1/sessions/{sid}/label",
                              json={"sample_id": pending["sample_id"],
                                    "label_index": 99})
        assert invalid.status_code == 422

        malformed = client.post(f"/api/v1/sessions/{sid}/label",
                                json={"sample_id": pending["sample_id"]})
        assert malformed.status_code == 400

        unknown = client.get("/api/v1/sessions/zzz/pending")
        assert unknown.status_code == 404

        ok = client.post(f"/api/v1/sessions/{sid}/label",
                         json={"sample_id": pending["sample_id"],
                               "label_index": 0})
        assert ok.status_code == 200

        retry = client.post(f"/api/v1/sessions/{sid}/label",
                            json={"sample_id": pending["sample_id"],
                                  "label_index": 0})
        assert retry.status_code == 200
        assert retry.json()["outcome"] in ("duplicate", "accepted")


class TestOracleMode:
    def test_pending_always_empty(self):
        runner, _ = make_runner(feedback="oracle", gamma=0.3)
        app = create_app(runner)
        client = TestClient(app)
        sid = runner.session_id
        runner.start()
        assert wait_for(lambda: client.get("/api/v1/sessions").json()[0]["status"]
                        == "finished", timeout=30)
        resp = client.get(f"/api/v1/sessions/{sid}/pending")
        assert resp.status_code == 204

    def test_metrics_monotone_in_processed_count(self):
        runner, _ = make_runner(feedback="oracle", gamma=0.1, n=300)
        app = create_app(runner)
        client = TestClient(app)
        sid = runner.session_id
        runner.start()
        seen = []
        for _ in range(50):
            m = client.get(f"/api/v1/sessions/{sid}/metrics").json()
            seen.append(m["summary"]["n"])
            if client.get("/api/v1/sessions").json()[0]["status"] == "finished":
                break
            time.sleep(0.01)
        assert all(b >= a for a, b in zip(seen, seen[1:]))


class TestStaticDir:
    def test_ui_bundle_served(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>ui</body></html>")
        runner, _ = make_runner(feedback="oracle", n=5)
        app = create_app(runner, static_dir=str(tmp_path))
        client = TestClient(app)
        resp = client.get("/")
        assert resp.status_code == 200
        assert "ui" in resp.text
