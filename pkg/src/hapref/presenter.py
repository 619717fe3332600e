"""Presentation sinks: where "play stimulus X now" commands go.

Real hardware is out of scope; the sinks are the software stand-ins. ``log``
only records the command in the session event log, ``file`` additionally
appends the stimulus trajectory frames to an ndjson file for offline
drivers, ``stream`` forwards the command as one JSON line over a local TCP
socket to an external driver. Presentation is advisory: a dead sink flags
the session as degraded but never blocks the protocol.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass

from .config import PresenterConfig
from .stimuli import StimulusSpec, generate_trajectory


@dataclass(frozen=True)
class PresentCommand:
    session_id: str
    stimulus_id: int
    trajectory_ref: str  # "catalog:<id>"; frames resolvable from the catalog
    issued_at: str

    def to_payload(self) -> dict:
        return {"session_id": self.session_id, "stimulus_id": self.stimulus_id,
                "trajectory_ref": self.trajectory_ref, "issued_at": self.issued_at}


class LogPresenter:
    """Default sink: the event-log record is the whole side effect."""

    name = "log"

    def dispatch(self, command: PresentCommand, spec: StimulusSpec) -> str:
        return "logged"


class FilePresenter:
    """Appends the full frame-by-frame trajectory per presentation."""

    name = "file"

    def __init__(self, path: str):
        self.path = path

    def dispatch(self, command: PresentCommand, spec: StimulusSpec) -> str:
        with open(self.path, "a") as fp:
            for frame in generate_trajectory(spec):
                fp.write(json.dumps({
                    "session_id": command.session_id,
                    "stimulus_id": command.stimulus_id,
                    "t_s": frame.t,
                    "foci": [[f.x, f.y, f.amplitude] for f in frame.foci],
                }) + "\n")
        return "written"


class StreamPresenter:
    """One JSON line per command over TCP; the driver resolves frames itself."""

    name = "stream"

    def __init__(self, host: str, port: int, timeout: float = 0.5):
        self.host = host
        self.port = port
        self.timeout = timeout

    def dispatch(self, command: PresentCommand, spec: StimulusSpec) -> str:
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as conn:
                conn.sendall((json.dumps(command.to_payload()) + "\n").encode())
            return "sent"
        except OSError:
            return "unreachable"


def make_presenter(config: PresenterConfig):
    if config.sink == "log":
        return LogPresenter()
    if config.sink == "file":
        return FilePresenter(config.path)
    return StreamPresenter(config.host, config.port)
