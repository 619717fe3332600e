import io
import json
import zipfile
from dataclasses import replace

import numpy as np
import pytest
from fastapi.testclient import TestClient

from hapref.config import AppConfig, PresenterConfig, ServiceConfig
from hapref.presenter import FilePresenter, LogPresenter, PresentCommand
from hapref.service import create_app
from hapref.simulation import _pick_extremes, paper_like_participant, ratings_from_perceived, simulate_choice
from hapref.store import SessionStore
from hapref.stimuli import default_catalog

TOKEN = "lab-secret"


def make_config(tmp_path, **presenter_kwargs) -> AppConfig:
    return AppConfig(
        presenter=PresenterConfig(**presenter_kwargs) if presenter_kwargs else PresenterConfig(),
        service=ServiceConfig(data_dir=str(tmp_path / "data"),
                              experimenter_token=TOKEN),
    )


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(make_config(tmp_path)))


def collect_keys(obj, found=None):
    found = set() if found is None else found
    if isinstance(obj, dict):
        for key, value in obj.items():
            found.add(key)
            collect_keys(value, found)
    elif isinstance(obj, list):
        for value in obj:
            collect_keys(value, found)
    return found


FORBIDDEN_PARTICIPANT_KEYS = {"omitted", "implied_winner", "trials", "schedule",
                              "omitted_pairs", "twice_pairs", "once_pairs"}


def drive_session(client, seed=11, collect_leaks=False):
    """Scripted participant completing a full session over HTTP."""
    participant = paper_like_participant(seed)
    perceived = participant.perceived_utilities()
    choice_rng = participant.choice_rng()

    created = client.post("/api/sessions", json={"seed": seed})
    assert created.status_code == 201
    session_id = created.json()["session_id"]
    leaked = set()

    def post(kind, payload, key=None):
        body = {"kind": kind, "payload": payload}
        if key:
            body["idempotency_key"] = key
        response = client.post(f"/api/sessions/{session_id}/response", json=body)
        assert response.status_code == 200, response.text
        if collect_leaks:
            leaked.update(collect_keys(response.json()))
        return response.json()

    ratings = None
    for step in range(2000):
        nxt = client.get(f"/api/sessions/{session_id}/next")
        if nxt.status_code == 410:
            break
        assert nxt.status_code == 200
        prompt = nxt.json()
        if collect_leaks:
            leaked.update(collect_keys(prompt))
        kind = prompt["kind"]
        if kind == "familiarize":
            post("confirm_familiarization", {})
        elif kind == "pick_group_extremes":
            best, worst = _pick_extremes(prompt["stimulus_ids"], perceived)
            post("group_extremes", {"group_index": prompt["group_index"],
                                    "most_pleasant": best, "most_unpleasant": worst})
        elif kind == "pick_anchors":
            best = max(prompt["pleasant_candidates"], key=lambda i: (perceived[i], -i))
            worst = min(prompt["unpleasant_candidates"], key=lambda i: (perceived[i], i))
            post("anchors", {"best": best, "worst": worst})
            ratings = ratings_from_perceived(perceived, best, worst)
        elif kind == "rate":
            sid = prompt["stimulus_ids"][0]
            post("rating", {"stimulus_id": sid, "value": ratings[sid]},
                 key=f"rate-{sid}")
        elif kind == "choose":
            a, b = prompt["stimulus_ids"]
            winner = simulate_choice(participant, (a, b), choice_rng)
            post("choice", {"id_a": a, "id_b": b, "winner": winner},
                 key=f"choice-{step}")
        else:
            raise AssertionError(f"unexpected prompt kind {kind}")
    else:
        raise AssertionError("session did not finish")
    return session_id, leaked


class TestBasics:
    def test_healthz(self, client):
        body = client.get("/api/healthz").json()
        assert body["status"] == "ok"
        assert body["backend"] in ("compiled", "python")

    def test_catalog(self, client):
        body = client.get("/api/catalog").json()
        assert len(body["stimuli"]) == 15
        assert body["stimuli"][0]["pattern"] == "static"
        assert "50" in body["descriptions"]["0"] or "50" in str(body["descriptions"])

    def test_trajectory_endpoint(self, client):
        body = client.get("/api/catalog/6/trajectory").json()
        assert body["stimulus_id"] == 6
        assert len(body["frames"]) == 3000
        assert len(body["frames"][0]["foci"]) == 1
        decimated = client.get("/api/catalog/6/trajectory?stride=30").json()
        assert len(decimated["frames"]) == 100
        two_point = client.get("/api/catalog/12/trajectory?stride=100").json()
        assert all(len(f["foci"]) == 2 for f in two_point["frames"])
        assert client.get("/api/catalog/99/trajectory").status_code == 404
        assert client.get("/api/catalog/6/trajectory?stride=0").status_code == 400

    def test_create_session_defaults(self, client):
        response = client.post("/api/sessions", json={})
        assert response.status_code == 201
        assert response.json()["phase"] == "familiarization"

    def test_create_sessions_distinct_ids(self, client):
        a = client.post("/api/sessions", json={}).json()["session_id"]
        b = client.post("/api/sessions", json={}).json()["session_id"]
        assert a != b

    def test_wrong_catalog_rejected(self, client):
        response = client.post("/api/sessions", json={"catalog_ids": list(range(10))})
        assert response.status_code == 400
        assert response.json()["detail"]["field"] == "catalog_ids"

    def test_bad_schedule_rules_rejected(self, client):
        response = client.post("/api/sessions",
                               json={"schedule_rules": {0: -2}})
        assert response.status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/api/sessions/nope/next").status_code == 404
        assert client.get("/api/sessions/nope/results").status_code == 404

    def test_fresh_session_prompts_familiarization(self, client):
        session_id = client.post("/api/sessions", json={"seed": 1}).json()["session_id"]
        prompt = client.get(f"/api/sessions/{session_id}/next").json()
        assert prompt["kind"] == "familiarize"
        assert sorted(prompt["stimulus_ids"]) == list(range(15))


class TestFlow:
    def test_full_session_and_results(self, client):
        session_id, _ = drive_session(client, seed=21)
        finished = client.get(f"/api/sessions/{session_id}/next")
        assert finished.status_code == 410
        results = client.get(f"/api/sessions/{session_id}/results")
        assert results.status_code == 200
        body = results.json()
        scores = body["normalized_scores"]
        assert len(scores) == 15
        assert min(scores) == -3.0 and max(scores) == 3.0
        assert body["converged"]
        assert -1.0 <= body["analysis"]["r"] <= 1.0
        assert body["metadata"]["n_observed"] > 0
        assert body["metadata"]["synthetic_only"] is False

    def test_results_cached_and_identical(self, client):
        session_id, _ = drive_session(client, seed=22)
        first = client.get(f"/api/sessions/{session_id}/results").json()
        second = client.get(f"/api/sessions/{session_id}/results").json()
        assert first == second

    def test_results_before_complete_409(self, client):
        session_id = client.post("/api/sessions", json={"seed": 2}).json()["session_id"]
        response = client.get(f"/api/sessions/{session_id}/results")
        assert response.status_code == 409
        assert "remaining_trials" in response.json()["detail"]

    def test_phase_mismatch_409_with_hint(self, client):
        session_id = client.post("/api/sessions", json={"seed": 3}).json()["session_id"]
        response = client.post(f"/api/sessions/{session_id}/response", json={
            "kind": "choice", "payload": {"id_a": 0, "id_b": 1, "winner": 0}})
        assert response.status_code == 409
        assert response.json()["detail"]["expected_kind"] == "confirm_familiarization"

    def test_malformed_payload_400(self, client):
        session_id = client.post("/api/sessions", json={"seed": 4}).json()["session_id"]
        response = client.post(f"/api/sessions/{session_id}/response", json={
            "kind": "confirm_familiarization", "payload": {}})
        assert response.status_code == 200
        response = client.post(f"/api/sessions/{session_id}/response", json={
            "kind": "group_extremes", "payload": {"group_index": 0}})
        assert response.status_code == 400

    def test_idempotent_duplicate_is_noop(self, client, tmp_path):
        session_id = client.post("/api/sessions", json={"seed": 5}).json()["session_id"]
        body = {"kind": "confirm_familiarization", "payload": {},
                "idempotency_key": "confirm-1"}
        first = client.post(f"/api/sessions/{session_id}/response", json=body).json()
        second = client.post(f"/api/sessions/{session_id}/response", json=body).json()
        assert first["phase"] == second["phase"] == "group_extremes"
        assert second["duplicate"] is True
        store = client.app.state.store
        events = store.get(session_id).session.events
        assert sum(1 for e in events if e.type == "familiarization_confirmed") == 1

    def test_participant_routes_never_leak_schedule(self, client):
        _, leaked = drive_session(client, seed=23, collect_leaks=True)
        assert not (leaked & FORBIDDEN_PARTICIPANT_KEYS)


class TestExperimenterRoutes:
    def test_export_requires_token(self, client):
        session_id, _ = drive_session(client, seed=31)
        assert client.get(f"/api/sessions/{session_id}/export").status_code == 401
        response = client.get(f"/api/sessions/{session_id}/export",
                              headers={"Authorization": f"Bearer {TOKEN}"})
        assert response.status_code == 200
        archive = zipfile.ZipFile(io.BytesIO(response.content))
        names = set(archive.namelist())
        assert {"events.ndjson", "ratings.csv", "schedule.csv", "omitted.csv",
                "dataset.csv", "estimate.csv"} <= names
        ratings = archive.read("ratings.csv").decode().strip().splitlines()
        assert len(ratings) == 16  # header + 15 stimuli

    def test_debug_partial_estimate_flagged(self, client):
        session_id, _ = drive_session(client, seed=32)
        response = client.get(f"/api/sessions/{session_id}/debug/estimate",
                              headers={"Authorization": f"Bearer {TOKEN}"})
        assert response.status_code == 200
        assert response.json()["partial"] is True

    def test_wrong_token_rejected(self, client):
        session_id = client.post("/api/sessions", json={"seed": 1}).json()["session_id"]
        response = client.get(f"/api/sessions/{session_id}/export",
                              headers={"Authorization": "Bearer wrong"})
        assert response.status_code == 401

    def test_session_list_requires_token_and_reports_progress(self, client):
        assert client.get("/api/sessions").status_code == 401
        complete_id, _ = drive_session(client, seed=33)
        fresh_id = client.post("/api/sessions", json={"seed": 34}).json()["session_id"]
        body = client.get("/api/sessions",
                          headers={"Authorization": f"Bearer {TOKEN}"}).json()
        by_id = {row["session_id"]: row for row in body["sessions"]}
        assert by_id[complete_id]["complete"] is True
        assert by_id[fresh_id]["phase"] == "familiarization"
        assert by_id[fresh_id]["complete"] is False


class TestCrashRecovery:
    def test_restart_mid_session_completes_identically(self, tmp_path):
        config = make_config(tmp_path)
        seed = 41

        # uninterrupted reference run in a separate data dir
        ref_config = AppConfig(service=ServiceConfig(
            data_dir=str(tmp_path / "ref"), experimenter_token=TOKEN))
        ref_client = TestClient(create_app(ref_config))
        ref_id, _ = drive_session(ref_client, seed=seed)
        ref_results = ref_client.get(f"/api/sessions/{ref_id}/results").json()

        # interrupted run: answer part of the session, then "crash"
        participant = paper_like_participant(seed)
        perceived = participant.perceived_utilities()
        client1 = TestClient(create_app(config))
        created = client1.post("/api/sessions", json={"seed": seed})
        session_id = created.json()["session_id"]
        client1.post(f"/api/sessions/{session_id}/response",
                     json={"kind": "confirm_familiarization", "payload": {}})
        prompt = client1.get(f"/api/sessions/{session_id}/next").json()
        best, worst = _pick_extremes(prompt["stimulus_ids"], perceived)
        client1.post(f"/api/sessions/{session_id}/response", json={
            "kind": "group_extremes",
            "payload": {"group_index": prompt["group_index"],
                        "most_pleasant": best, "most_unpleasant": worst}})

        # new store + app over the same data dir picks the session back up
        client2 = TestClient(create_app(make_config(tmp_path)))
        resumed = client2.get(f"/api/sessions/{session_id}/next")
        assert resumed.status_code == 200
        assert resumed.json()["kind"] == "pick_group_extremes"
        assert resumed.json()["group_index"] == 1

        choice_rng = participant.choice_rng()
        ratings = None
        for step in range(2000):
            nxt = client2.get(f"/api/sessions/{session_id}/next")
            if nxt.status_code == 410:
                break
            prompt = nxt.json()
            kind = prompt["kind"]
            if kind == "pick_group_extremes":
                best, worst = _pick_extremes(prompt["stimulus_ids"], perceived)
                payload = {"group_index": prompt["group_index"],
                           "most_pleasant": best, "most_unpleasant": worst}
                client2.post(f"/api/sessions/{session_id}/response",
                             json={"kind": "group_extremes", "payload": payload})
            elif kind == "pick_anchors":
                best = max(prompt["pleasant_candidates"], key=lambda i: (perceived[i], -i))
                worst = min(prompt["unpleasant_candidates"], key=lambda i: (perceived[i], i))
                client2.post(f"/api/sessions/{session_id}/response",
                             json={"kind": "anchors", "payload": {"best": best, "worst": worst}})
                ratings = ratings_from_perceived(perceived, best, worst)
            elif kind == "rate":
                sid = prompt["stimulus_ids"][0]
                client2.post(f"/api/sessions/{session_id}/response",
                             json={"kind": "rating",
                                   "payload": {"stimulus_id": sid, "value": ratings[sid]}})
            elif kind == "choose":
                a, b = prompt["stimulus_ids"]
                winner = simulate_choice(participant, (a, b), choice_rng)
                client2.post(f"/api/sessions/{session_id}/response",
                             json={"kind": "choice",
                                   "payload": {"id_a": a, "id_b": b, "winner": winner}})

        # identical derived state modulo the server-assigned session id
        state = client2.app.state.store.get(session_id).session.state_dict()
        ref_state = ref_client.app.state.store.get(ref_id).session.state_dict()
        state.pop("session_id"), ref_state.pop("session_id")
        assert state == ref_state
        results = client2.get(f"/api/sessions/{session_id}/results").json()
        assert results["normalized_scores"] == ref_results["normalized_scores"]
        assert results["theta"] == ref_results["theta"]

    def test_acks_survive_restart(self, tmp_path):
        config = make_config(tmp_path)
        client1 = TestClient(create_app(config))
        session_id = client1.post("/api/sessions", json={"seed": 6}).json()["session_id"]
        body = {"kind": "confirm_familiarization", "payload": {},
                "idempotency_key": "once"}
        client1.post(f"/api/sessions/{session_id}/response", json=body)

        client2 = TestClient(create_app(make_config(tmp_path)))
        replayed = client2.post(f"/api/sessions/{session_id}/response", json=body)
        assert replayed.status_code == 200
        assert replayed.json()["duplicate"] is True
        events = client2.app.state.store.get(session_id).session.events
        assert sum(1 for e in events if e.type == "familiarization_confirmed") == 1


class TestPresenters:
    def test_log_sink_appends_event(self, tmp_path):
        client = TestClient(create_app(make_config(tmp_path)))
        session_id = client.post("/api/sessions", json={"seed": 7}).json()["session_id"]
        client.get(f"/api/sessions/{session_id}/next")
        events = client.app.state.store.get(session_id).session.events
        presented = [e for e in events if e.type == "presentation"]
        assert len(presented) == 15  # familiarization presents every stimulus

    def test_file_presenter_writes_frames(self, tmp_path):
        path = tmp_path / "frames.ndjson"
        presenter = FilePresenter(str(path))
        spec = default_catalog()[0]
        command = PresentCommand(session_id="s", stimulus_id=0,
                                 trajectory_ref="catalog:0", issued_at="t")
        assert presenter.dispatch(command, spec) == "written"
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert len(lines) == 3000
        assert all(line["stimulus_id"] == 0 for line in lines)

    def test_stream_sink_unreachable_sets_degraded(self, tmp_path):
        config = make_config(tmp_path, sink="stream", host="127.0.0.1", port=59_999)
        client = TestClient(create_app(config))
        session_id = client.post("/api/sessions", json={"seed": 8}).json()["session_id"]
        prompt = client.get(f"/api/sessions/{session_id}/next")
        assert prompt.status_code == 200
        assert prompt.json().get("presenter_degraded") is True
        # the protocol continues despite the dead sink
        ok = client.post(f"/api/sessions/{session_id}/response",
                         json={"kind": "confirm_familiarization", "payload": {}})
        assert ok.status_code == 200
        events = client.app.state.store.get(session_id).session.events
        assert any(e.type == "presenter_degraded" for e in events)
