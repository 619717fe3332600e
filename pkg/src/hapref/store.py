"""Durable session storage: one append-only event-log file per session.

The ndjson event log is the single source of truth; loading a session means
replaying its log. Acknowledgments for idempotent response delivery live in
a sidecar ndjson (service plumbing, not protocol state). Every acknowledged
response is persisted before the acknowledgment is returned.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field

from .config import ScheduleConfig
from .errors import HaprefError
from .protocol import Event, Session, events_from_jsonl
from .stimuli import StimulusSpec, default_catalog


class UnknownSessionError(HaprefError, KeyError):
    pass


@dataclass
class StoredSession:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    n_persisted: int = 0
    acks: dict[str, dict] = field(default_factory=dict)
    degraded: bool = False


class SessionStore:
    def __init__(self, data_dir: str, catalog: list[StimulusSpec] | None = None):
        self.data_dir = data_dir
        self.catalog = default_catalog() if catalog is None else catalog
        os.makedirs(data_dir, exist_ok=True)
        self._sessions: dict[str, StoredSession] = {}
        self._create_lock = threading.Lock()
        for name in sorted(os.listdir(data_dir)):
            if name.endswith(".events.ndjson"):
                self._load(name[: -len(".events.ndjson")])

    # --- paths ----------------------------------------------------------

    def _events_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.events.ndjson")

    def _acks_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.acks.ndjson")

    # --- lifecycle --------------------------------------------------------

    def create(self, seed: int, schedule_config: ScheduleConfig | None = None,
               session_id: str | None = None) -> Session:
        with self._create_lock:
            session_id = session_id or uuid.uuid4().hex
            if session_id in self._sessions:
                raise HaprefError(f"session id collision: {session_id}")
            session = Session.start(self.catalog, seed=seed, session_id=session_id,
                                    schedule_config=schedule_config)
            stored = StoredSession(session=session)
            self._sessions[session_id] = stored
        self.persist(session_id)
        return session

    def _load(self, session_id: str) -> None:
        with open(self._events_path(session_id)) as fp:
            events = events_from_jsonl(fp.read())
        session = Session.replay(events, self.catalog)
        stored = StoredSession(session=session, n_persisted=len(events))
        acks_path = self._acks_path(session_id)
        if os.path.exists(acks_path):
            with open(acks_path) as fp:
                for line in fp:
                    if line.strip():
                        record = json.loads(line)
                        stored.acks[record["key"]] = record["ack"]
        self._sessions[session_id] = stored

    def get(self, session_id: str) -> StoredSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def ids(self) -> list[str]:
        return sorted(self._sessions)

    # --- persistence ------------------------------------------------------

    def persist(self, session_id: str) -> None:
        """Append any not-yet-persisted events to the session's log file."""
        stored = self.get(session_id)
        new_events: list[Event] = stored.session.events[stored.n_persisted:]
        if not new_events:
            return
        with open(self._events_path(session_id), "a") as fp:
            for event in new_events:
                fp.write(event.to_json() + "\n")
            fp.flush()
            os.fsync(fp.fileno())
        stored.n_persisted = len(stored.session.events)

    def record_ack(self, session_id: str, key: str, ack: dict) -> None:
        stored = self.get(session_id)
        stored.acks[key] = ack
        with open(self._acks_path(session_id), "a") as fp:
            fp.write(json.dumps({"key": key, "ack": ack}) + "\n")
            fp.flush()

    def event_log_hash(self, session_id: str) -> str:
        import hashlib

        self.persist(session_id)
        with open(self._events_path(session_id), "rb") as fp:
            return hashlib.sha256(fp.read()).hexdigest()
