import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from mograft.denoiser import init_embeddings, init_model
from mograft.service import create_app, decimate
from mograft.synth import LABELS


def tiny_app(start_worker=True):
    model = init_model(40, 59, embed_dim=16, hidden=(16, 16), seed=0)
    table = init_embeddings(LABELS, embed_dim=16, seed=0)
    return create_app(model=model, embeddings=table, diffusion_steps=6,
                      start_worker=start_worker)


EDIT_BODY = {
    "base_id": "base:jump",
    "input_id": "input:legs_spread_pose",
    "scenario": "local",
    "pose_steps": [20],
    "main_step": 20,
    "pad": 2,
    "v": 5.0,
    "rho": 0.5,
    "q": 0.5,
    "iters1": 12,
    "iters2": 12,
    "seed": 0,
}


def wait_ready(client, job_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        body = client.get(f"/api/edits/{job_id}").json()
        if body["stage"] in ("ready", "failed"):
            return body
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


@pytest.fixture(scope="module")
def client():
    with TestClient(tiny_app()) as c:
        yield c


class TestDecimate:
    def test_short_traces_pass_through(self):
        assert decimate([1.0, 2.0, 3.0]) == [1.0, 2.0, 3.0]

    def test_long_traces_capped_keeping_last(self):
        values = list(np.linspace(0.0, 1.0, 4321))
        out = decimate(values)
        assert len(out) <= 500
        assert out[0] == values[0]
        assert out[-1] == values[-1]


class TestEndpoints:
    def test_health(self, client):
        body = client.get("/api/health").json()
        assert "version" in body

    def test_motion_listing(self, client):
        items = client.get("/api/motions").json()
        ids = {item["id"] for item in items}
        assert "base:walk" in ids and "input:march_clip" in ids
        jump = next(i for i in items if i["id"] == "base:jump")
        assert jump["frames"] == 40 and jump["fps"] == 20.0

    def test_world_payload_shape(self, client):
        frames = client.get("/api/motions/base:walk/world").json()
        assert len(frames) == 40
        assert len(frames[0]) == 5
        assert len(frames[0][0]) == 3

    def test_unknown_motion_404(self, client):
        assert client.get("/api/motions/nope/world").status_code == 404

    def test_edit_job_runs_to_ready(self, client):
        resp = client.post("/api/edits", json=EDIT_BODY)
        assert resp.status_code == 202
        job_id = resp.json()["job_id"]
        body = wait_ready(client, job_id)
        assert body["stage"] == "ready"
        assert body["error"] is None
        assert body["progress"]["current"] == body["progress"]["total"] == 24
        assert len(body["trace_stage1"]) == 12
        assert len(body["trace_stage2"]) == 12

    def test_invalid_config_400_names_invariant(self, client):
        bad = dict(EDIT_BODY, v=1.0)
        resp = client.post("/api/edits", json=bad)
        assert resp.status_code == 400
        assert "v must exceed 1" in resp.json()["detail"]

    def test_unknown_base_404(self, client):
        resp = client.post("/api/edits", json=dict(EDIT_BODY, base_id="base:nope"))
        assert resp.status_code == 404

    def test_unknown_job_404(self, client):
        assert client.get("/api/edits/missing").status_code == 404

    def test_generate_deterministic_payloads(self, client):
        job_id = client.post("/api/edits", json=EDIT_BODY).json()["job_id"]
        wait_ready(client, job_id)
        first = client.post(f"/api/edits/{job_id}/generate?eta=0.7&seed=3")
        second = client.post(f"/api/edits/{job_id}/generate?eta=0.7&seed=3")
        assert first.status_code == second.status_code == 200
        a = client.get(f"/api/motions/{first.json()['motion_id']}/world").json()
        b = client.get(f"/api/motions/{second.json()['motion_id']}/world").json()
        assert a == b

    def test_generate_rejects_bad_eta(self, client):
        job_id = client.post("/api/edits", json=EDIT_BODY).json()["job_id"]
        wait_ready(client, job_id)
        resp = client.post(f"/api/edits/{job_id}/generate?eta=1.5&seed=0")
        assert resp.status_code == 400

    def test_distinct_etas_distinct_motions(self, client):
        job_id = client.post("/api/edits", json=EDIT_BODY).json()["job_id"]
        wait_ready(client, job_id)
        ids = set()
        payloads = []
        for eta in (0.0, 0.5, 1.0):
            motion_id = client.post(
                f"/api/edits/{job_id}/generate?eta={eta}&seed=1"
            ).json()["motion_id"]
            ids.add(motion_id)
            payloads.append(client.get(f"/api/motions/{motion_id}/world").json())
        assert len(ids) == 3
        assert payloads[0] != payloads[1] != payloads[2]

    def test_status_poll_is_fast_under_load(self, client):
        job_id = client.post(
            "/api/edits", json=dict(EDIT_BODY, iters1=4000, iters2=0)
        ).json()["job_id"]
        for _ in range(5):
            start = time.perf_counter()
            assert client.get(f"/api/edits/{job_id}").status_code == 200
            assert time.perf_counter() - start < 0.1
        wait_ready(client, job_id, timeout=120.0)


class TestWorkerGate:
    def test_generate_before_ready_409(self):
        with TestClient(tiny_app(start_worker=False)) as client:
            job_id = client.post("/api/edits", json=EDIT_BODY).json()["job_id"]
            resp = client.post(f"/api/edits/{job_id}/generate?eta=0.5&seed=0")
            assert resp.status_code == 409


class TestCombinedExposure:
    def test_combined_motion_world_available(self):
        with TestClient(tiny_app()) as client:
            job_id = client.post("/api/edits", json=EDIT_BODY).json()["job_id"]
            resp = client.get(f"/api/motions/combined:{job_id}/world")
            assert resp.status_code == 200
            assert len(resp.json()) == 40
            wait_ready(client, job_id)
