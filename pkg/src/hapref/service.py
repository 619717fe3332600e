"""HTTP session service.

Participant-facing routes drive the protocol (create session, fetch next
prompt, post response, fetch results); experimenter routes (bearer token)
expose the full export bundle and a clearly flagged partial-data estimate.
Participant routes never reveal upcoming trials or the omitted pairs'
implied winners.
"""

from __future__ import annotations

import io
import os
import zipfile
from datetime import datetime, timezone

from fastapi import Depends, FastAPI, HTTPException, Request, Response
from pydantic import BaseModel, Field

from .analysis import ParticipantResult, report
from .btmodel import estimate_ilsr, write_estimate_csv
from .config import AppConfig, ScheduleConfig
from .errors import (
    ConfigurationError,
    DegenerateScaleError,
    DuplicateResponseError,
    PhaseError,
    ProtocolError,
    SequencingError,
)
from .presenter import PresentCommand, make_presenter
from .protocol import Phase, Session
from .store import SessionStore, UnknownSessionError
from .stimuli import catalog_table, generate_trajectory
from . import btmodel

EXPECTED_KIND_BY_PHASE = {
    Phase.FAMILIARIZATION: "confirm_familiarization",
    Phase.GROUP_EXTREMES: "group_extremes",
    Phase.ANCHOR_SELECTION: "anchors",
    Phase.LIKERT_RATING: "rating",
    Phase.PAIRWISE_COMPARISON: "choice",
}


class CreateSessionRequest(BaseModel):
    seed: int | None = None
    catalog_ids: list[int] | None = None
    schedule_rules: dict[int, int] | None = None


class ResponseBody(BaseModel):
    kind: str
    payload: dict = Field(default_factory=dict)
    idempotency_key: str | None = None


def _prompt_json(session: Session) -> dict:
    prompt = session.next_prompt()
    body = {
        "phase": prompt.phase,
        "kind": prompt.kind,
        "stimulus_ids": list(prompt.stimulus_ids),
        "progress_done": prompt.progress_done,
        "progress_total": prompt.progress_total,
    }
    if prompt.group_index is not None:
        body["group_index"] = prompt.group_index
    if prompt.pleasant_candidates is not None:
        body["pleasant_candidates"] = list(prompt.pleasant_candidates)
        body["unpleasant_candidates"] = list(prompt.unpleasant_candidates)
    if prompt.anchor_best is not None:
        body["anchor_best"] = prompt.anchor_best
        body["anchor_worst"] = prompt.anchor_worst
    return body


def create_app(config: AppConfig | None = None,
               store: SessionStore | None = None) -> FastAPI:
    config = config or AppConfig()
    store = store or SessionStore(config.service.data_dir)
    presenter = make_presenter(config.presenter)
    app = FastAPI(title="hapref session service")
    app.state.store = store
    app.state.config = config
    results_cache: dict[str, dict] = {}

    # serve the browser UI if its build output is around
    for candidate in ("frontend/dist", "../frontend/dist"):
        if os.path.isdir(candidate):
            from fastapi.staticfiles import StaticFiles

            app.mount("/app", StaticFiles(directory=candidate, html=True), name="app")
            break

    def require_experimenter(request: Request) -> None:
        token = config.service.experimenter_token
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="experimenter token required")

    def stored_or_404(session_id: str):
        try:
            return store.get(session_id)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    def present(stored, stimulus_ids) -> None:
        """Log one command per stimulus, then dispatch; failures only flag."""
        session = stored.session
        specs = {s.id: s for s in session.catalog}
        for sid in stimulus_ids:
            command = PresentCommand(
                session_id=session.session_id, stimulus_id=int(sid),
                trajectory_ref=f"catalog:{sid}",
                issued_at=datetime.now(timezone.utc).isoformat())
            session.append_passive_event("presentation", command.to_payload())
            status = presenter.dispatch(command, specs[int(sid)])
            if status == "unreachable" and not stored.degraded:
                stored.degraded = True
                session.append_passive_event("presenter_degraded", {
                    "sink": presenter.name, "detail": "sink unreachable"})
        store.persist(session.session_id)

    @app.get("/api/healthz")
    def healthz():
        return {"status": "ok", "backend": btmodel.backend_name(),
                "sessions": len(store.ids())}

    @app.get("/api/catalog")
    def get_catalog():
        return {"stimuli": catalog_table(store.catalog),
                "descriptions": {s.id: s.describe() for s in store.catalog}}

    @app.get("/api/catalog/{stimulus_id}/trajectory")
    def get_trajectory(stimulus_id: int, stride: int = 1):
        """Exported focal-point frames; stride decimates for previews."""
        specs = {s.id: s for s in store.catalog}
        if stimulus_id not in specs:
            raise HTTPException(status_code=404, detail=f"unknown stimulus {stimulus_id}")
        if stride < 1:
            raise HTTPException(status_code=400, detail="stride must be >= 1")
        spec = specs[stimulus_id]
        frames = generate_trajectory(spec)[::stride]
        return {
            "stimulus_id": stimulus_id,
            "description": spec.describe(),
            "update_rate": spec.update_rate,
            "path_length": spec.path_length,
            "stride": stride,
            "frames": [{"t": f.t, "foci": [[focus.x, focus.y, focus.amplitude]
                                           for focus in f.foci]} for f in frames],
        }

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionRequest):
        if body.catalog_ids is not None and body.catalog_ids != [s.id for s in store.catalog]:
            raise HTTPException(status_code=400, detail={
                "field": "catalog_ids",
                "error": f"catalog must be the {len(store.catalog)} ids "
                         f"{[s.id for s in store.catalog]}"})
        schedule_config = None
        if body.schedule_rules is not None:
            try:
                schedule_config = ScheduleConfig(repeats_by_gap=dict(body.schedule_rules))
            except ConfigurationError as exc:
                raise HTTPException(status_code=400,
                                    detail={"field": "schedule_rules", "error": str(exc)})
        seed = body.seed if body.seed is not None else int.from_bytes(os.urandom(4), "big")
        session = store.create(seed=seed, schedule_config=schedule_config)
        return {"session_id": session.session_id, "phase": session.phase.value}

    @app.get("/api/sessions/{session_id}/next")
    def get_next(session_id: str):
        stored = stored_or_404(session_id)
        with stored.lock:
            if stored.session.phase is Phase.COMPLETE:
                raise HTTPException(status_code=410, detail={"finished": True})
            body = _prompt_json(stored.session)
            present(stored, body["stimulus_ids"])
            if stored.degraded:
                body["presenter_degraded"] = True
            return body

    @app.post("/api/sessions/{session_id}/response")
    def post_response(session_id: str, body: ResponseBody):
        stored = stored_or_404(session_id)
        with stored.lock:
            session = stored.session
            if body.idempotency_key and body.idempotency_key in stored.acks:
                return {**stored.acks[body.idempotency_key], "duplicate": True}
            expected = EXPECTED_KIND_BY_PHASE.get(session.phase)
            if expected is None:
                raise HTTPException(status_code=410, detail={"finished": True})
            if body.kind != expected:
                raise HTTPException(status_code=409, detail={
                    "error": f"session is in phase {session.phase.value}",
                    "expected_kind": expected})
            try:
                _apply_response(session, body.kind, body.payload)
            except (DuplicateResponseError, SequencingError, ProtocolError) as exc:
                raise HTTPException(status_code=409, detail={"error": str(exc)})
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(status_code=400, detail={"error": str(exc)})
            store.persist(session_id)
            ack = {
                "phase": session.phase.value,
                "progress_done": 0,
                "progress_total": 0,
                "duplicate": False,
            }
            prompt = session.next_prompt()
            if prompt is not None:
                ack["progress_done"] = prompt.progress_done
                ack["progress_total"] = prompt.progress_total
            if body.idempotency_key:
                store.record_ack(session_id, body.idempotency_key,
                                 {k: v for k, v in ack.items() if k != "duplicate"})
            return ack

    @app.get("/api/sessions/{session_id}/results")
    def get_results(session_id: str):
        stored = stored_or_404(session_id)
        with stored.lock:
            session = stored.session
            if session.phase is not Phase.COMPLETE:
                remaining = 0
                if session.schedule is not None:
                    remaining = session.schedule.total_trials - len(session.choices)
                raise HTTPException(status_code=409, detail={
                    "error": "session is not complete",
                    "phase": session.phase.value,
                    "remaining_trials": remaining})
            log_hash = store.event_log_hash(session_id)
            if log_hash not in results_cache:
                results_cache[log_hash] = _compute_results(session, config, stored)
            return results_cache[log_hash]

    @app.get("/api/sessions", dependencies=[Depends(require_experimenter)])
    def list_sessions():
        """Experimenter overview: phase and progress of every session."""
        rows = []
        for session_id in store.ids():
            session = store.get(session_id).session
            prompt = session.next_prompt()
            rows.append({
                "session_id": session_id,
                "phase": session.phase.value,
                "progress_done": prompt.progress_done if prompt else 0,
                "progress_total": prompt.progress_total if prompt else 0,
                "complete": session.phase is Phase.COMPLETE,
            })
        return {"sessions": rows}

    @app.get("/api/sessions/{session_id}/export",
             dependencies=[Depends(require_experimenter)])
    def export_session(session_id: str):
        stored = stored_or_404(session_id)
        with stored.lock:
            payload = _export_zip(stored.session, config)
        return Response(content=payload, media_type="application/zip",
                        headers={"Content-Disposition":
                                 f"attachment; filename={session_id}.zip"})

    @app.get("/api/sessions/{session_id}/debug/estimate",
             dependencies=[Depends(require_experimenter)])
    def debug_partial_estimate(session_id: str):
        """Experimenter-only: estimate on whatever data exists so far."""
        stored = stored_or_404(session_id)
        with stored.lock:
            session = stored.session
            if session.schedule is None:
                raise HTTPException(status_code=409,
                                    detail={"error": "no schedule yet; rate all stimuli first"})
            from .btmodel import ComparisonDataset, Outcome, Provenance

            outcomes = [Outcome(c.winner, c.id_a if c.winner == c.id_b else c.id_b,
                                Provenance.OBSERVED) for c in session.choices]
            for om in session.schedule.omitted:
                loser = om.pair[0] if om.implied_winner == om.pair[1] else om.pair[1]
                outcomes.append(Outcome(om.implied_winner, loser, Provenance.SYNTHETIC))
            dataset = ComparisonDataset(n_items=len(session.catalog), outcomes=tuple(outcomes))
            estimate = estimate_ilsr(dataset, alpha=config.bt.alpha, tol=config.bt.tol,
                                     max_iter=config.bt.max_iter,
                                     normalize_on=config.bt.normalize_on)
            return {"partial": True,
                    "answered_trials": len(session.choices),
                    "theta": [float(t) for t in estimate.theta],
                    "normalized_scores": None if estimate.normalized_scores is None
                    else [float(s) for s in estimate.normalized_scores]}

    return app


def _apply_response(session: Session, kind: str, payload: dict) -> None:
    if kind == "confirm_familiarization":
        session.confirm_familiarization()
    elif kind == "group_extremes":
        session.record_group_extremes(int(payload["group_index"]),
                                      int(payload["most_pleasant"]),
                                      int(payload["most_unpleasant"]))
    elif kind == "anchors":
        session.record_anchors(int(payload["best"]), int(payload["worst"]))
    elif kind == "rating":
        session.record_rating(int(payload["stimulus_id"]), int(payload["value"]))
    elif kind == "choice":
        session.record_choice((int(payload["id_a"]), int(payload["id_b"])),
                              int(payload["winner"]))
    else:
        raise ValueError(f"unknown response kind {kind!r}")


def _compute_results(session: Session, config: AppConfig, stored) -> dict:
    dataset = session.assemble_dataset()
    estimate = estimate_ilsr(dataset, alpha=config.bt.alpha, tol=config.bt.tol,
                             max_iter=config.bt.max_iter,
                             normalize_on=config.bt.normalize_on)
    body: dict = {
        "session_id": session.session_id,
        "theta": [float(t) for t in estimate.theta],
        "normalized_scores": None if estimate.normalized_scores is None
        else [float(s) for s in estimate.normalized_scores],
        "converged": estimate.converged,
        "iterations": estimate.iterations,
        "metadata": {
            "alpha": config.bt.alpha,
            "normalize_on": config.bt.normalize_on,
            "backend": btmodel.backend_name(),
            "n_observed": dataset.n_observed,
            "n_synthetic": dataset.n_synthetic,
            "synthetic_only": dataset.n_observed == 0,
            "presenter_degraded": stored.degraded,
        },
    }
    if estimate.normalized_scores is not None:
        result = ParticipantResult.from_vectors(
            session.session_id, session.rating_vector(), estimate.normalized_scores)
        body["analysis"] = {
            "before": [float(x) for x in result.before],
            "after": [float(x) for x in result.after],
            "r": result.r,
            "mad": result.mad,
        }
    return body


def _export_zip(session: Session, config: AppConfig) -> bytes:
    """Zip bundle: event log, ratings, schedule, omissions, dataset,
    estimate and the analysis report (experimenter view: includes omitted
    pairs and implied winners)."""
    import csv as _csv
    import tempfile

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as archive:
        archive.writestr("events.ndjson",
                         "".join(e.to_json() + "\n" for e in session.events))

        text = io.StringIO()
        writer = _csv.writer(text)
        writer.writerow(["stimulus_id", "rating", "is_anchor"])
        for sid in sorted(session.ratings):
            rating = session.ratings[sid]
            writer.writerow([sid, rating.value, rating.is_anchor])
        archive.writestr("ratings.csv", text.getvalue())

        if session.schedule is not None:
            text = io.StringIO()
            writer = _csv.writer(text)
            writer.writerow(["trial_index", "id_a", "id_b", "winner_id"])
            winners = {c.trial_index: c.winner for c in session.choices}
            for idx, trial in enumerate(session.schedule.trials):
                writer.writerow([idx, trial.id_left, trial.id_right, winners.get(idx, "")])
            archive.writestr("schedule.csv", text.getvalue())

            text = io.StringIO()
            writer = _csv.writer(text)
            writer.writerow(["id_a", "id_b", "implied_winner"])
            for om in session.schedule.omitted:
                writer.writerow([om.pair[0], om.pair[1], om.implied_winner])
            archive.writestr("omitted.csv", text.getvalue())

        if session.phase is Phase.COMPLETE:
            dataset = session.assemble_dataset()
            text = io.StringIO()
            writer = _csv.writer(text)
            writer.writerow(["winner_id", "loser_id", "provenance"])
            for o in dataset.outcomes:
                writer.writerow([o.winner, o.loser, o.provenance.value])
            archive.writestr("dataset.csv", text.getvalue())

            estimate = estimate_ilsr(dataset, alpha=config.bt.alpha, tol=config.bt.tol,
                                     max_iter=config.bt.max_iter,
                                     normalize_on=config.bt.normalize_on)
            with tempfile.TemporaryDirectory() as tmp:
                est_path = os.path.join(tmp, "estimate.csv")
                write_estimate_csv(est_path, estimate,
                                   alpha=config.bt.alpha, tol=config.bt.tol)
                archive.write(est_path, "estimate.csv")
                if estimate.normalized_scores is not None:
                    result = ParticipantResult.from_vectors(
                        session.session_id, session.rating_vector(),
                        estimate.normalized_scores)
                    for path in report([result], os.path.join(tmp, "report"),
                                       formats=("csv",)):
                        archive.write(path, f"report/{os.path.basename(path)}")
    return buf.getvalue()
