"""Elicitation session state machine.

One session walks a participant through: familiarization with all fifteen
stimuli, picking the most/least pleasant of each of five random groups of
three, choosing the global +3/-3 anchors from those picks, rating the
remaining thirteen stimuli on the 7-level scale, and answering the pairwise
comparisons scheduled from those ratings (equal ratings -> compared twice,
one level apart -> once, further apart -> omitted, with the higher-rated
stimulus recorded as an implied synthetic winner).

Every transition is recorded as an event; replaying the event log rebuilds
an identical session, which is the persistence and crash-recovery story.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterable, Mapping

import numpy as np

from .btmodel import ComparisonDataset, Outcome, Provenance, StrengthEstimate
from .config import ScheduleConfig
from .errors import (
    ConfigurationError,
    DuplicateResponseError,
    PhaseError,
    ProtocolError,
    SequencingError,
)
from .stimuli import StimulusSpec, default_catalog

N_STIMULI = 15
N_GROUPS = 5
GROUP_SIZE = 3
RATING_MIN, RATING_MAX = -3, 3

# independent RNG streams derived from the session seed
_STREAM_GROUPS = 0
_STREAM_FAMILIARIZATION = 1
_STREAM_RATING_ORDER = 2
_STREAM_SCHEDULE = 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


class Phase(Enum):
    FAMILIARIZATION = "familiarization"
    GROUP_EXTREMES = "group_extremes"
    ANCHOR_SELECTION = "anchor_selection"
    LIKERT_RATING = "likert_rating"
    PAIRWISE_COMPARISON = "pairwise_comparison"
    COMPLETE = "complete"


_PHASE_ORDER = list(Phase)


@dataclass(frozen=True)
class LikertRating:
    stimulus_id: int
    value: int
    is_anchor: bool = False


@dataclass(frozen=True)
class Trial:
    id_left: int
    id_right: int
    rep_index: int

    @property
    def pair(self) -> tuple[int, int]:
        return (min(self.id_left, self.id_right), max(self.id_left, self.id_right))


@dataclass(frozen=True)
class OmittedPair:
    pair: tuple[int, int]
    implied_winner: int


@dataclass(frozen=True)
class ComparisonSchedule:
    trials: tuple[Trial, ...]
    omitted: tuple[OmittedPair, ...]
    seed: int

    @property
    def total_trials(self) -> int:
        return len(self.trials)

    def pairs_by_repetition(self) -> dict[int, int]:
        """Number of unordered pairs scheduled for each repetition count (>= 1)."""
        reps: dict[tuple[int, int], int] = {}
        for t in self.trials:
            reps[t.pair] = reps.get(t.pair, 0) + 1
        counts: dict[int, int] = {}
        for r in reps.values():
            counts[r] = counts.get(r, 0) + 1
        return counts

    @property
    def twice_pairs(self) -> int:
        return self.pairs_by_repetition().get(2, 0)

    @property
    def once_pairs(self) -> int:
        return self.pairs_by_repetition().get(1, 0)

    @property
    def omitted_pairs(self) -> int:
        return len(self.omitted)


def build_schedule(ratings: Mapping[int, int], seed: int,
                   repeats_by_gap: Mapping[int, int] | None = None) -> ComparisonSchedule:
    """Derive the comparison schedule from complete ratings.

    Every unordered pair is classified exactly once by its absolute rating
    gap: scheduled ``repeats_by_gap[gap]`` times, or omitted with the
    higher-rated stimulus as implied winner. Trial order and within-trial
    left/right orientation are seeded.
    """
    if repeats_by_gap is None:
        repeats_by_gap = {0: 2, 1: 1}
    ids = sorted(ratings)
    if len(ids) < 2:
        raise ValueError("need ratings for at least two stimuli")
    for sid in ids:
        value = ratings[sid]
        if not isinstance(value, (int, np.integer)):
            raise ValueError(f"rating for stimulus {sid} is not an integer: {value!r}")

    scheduled: list[tuple[int, int, int]] = []
    omitted: list[OmittedPair] = []
    for a_pos, i in enumerate(ids):
        for j in ids[a_pos + 1:]:
            gap = abs(ratings[i] - ratings[j])
            reps = repeats_by_gap.get(gap, 0)
            if reps > 0:
                for rep in range(reps):
                    scheduled.append((i, j, rep))
            else:
                if ratings[i] == ratings[j]:
                    raise ConfigurationError(
                        f"schedule rule omits pair {(i, j)} with equal ratings; "
                        "an omitted pair needs a strictly higher-rated winner"
                    )
                winner = i if ratings[i] > ratings[j] else j
                omitted.append(OmittedPair(pair=(i, j), implied_winner=winner))

    rng = _rng(seed, _STREAM_SCHEDULE)
    order = rng.permutation(len(scheduled))
    flips = rng.random(len(scheduled)) < 0.5
    trials = []
    for pos in order:
        i, j, rep = scheduled[pos]
        if flips[pos]:
            i, j = j, i
        trials.append(Trial(id_left=i, id_right=j, rep_index=rep))
    return ComparisonSchedule(trials=tuple(trials), omitted=tuple(omitted), seed=seed)


@dataclass(frozen=True)
class PromptDescriptor:
    """What the participant should see next; never includes future trials
    or omission/implied-winner information."""

    phase: str
    kind: str  # familiarize | pick_group_extremes | pick_anchors | rate | choose
    stimulus_ids: tuple[int, ...]
    progress_done: int
    progress_total: int
    group_index: int | None = None
    pleasant_candidates: tuple[int, ...] | None = None
    unpleasant_candidates: tuple[int, ...] | None = None
    anchor_best: int | None = None
    anchor_worst: int | None = None


@dataclass(frozen=True)
class Event:
    ts: str
    session_id: str
    type: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"ts": self.ts, "session_id": self.session_id,
             "type": self.type, "payload": self.payload},
            sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Event":
        raw = json.loads(line)
        return cls(ts=raw["ts"], session_id=raw["session_id"],
                   type=raw["type"], payload=raw["payload"])


def events_to_jsonl(events: Iterable[Event]) -> str:
    return "".join(e.to_json() + "\n" for e in events)


def events_from_jsonl(text: str) -> list[Event]:
    return [Event.from_json(line) for line in text.splitlines() if line.strip()]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


# event types that do not affect protocol state (presenter traffic, notes)
PASSIVE_EVENT_TYPES = frozenset({"presentation", "presenter_degraded", "note"})


@dataclass
class ChoiceRecord:
    trial_index: int
    id_a: int
    id_b: int
    winner: int


class Session:
    """Single-participant elicitation session.

    All mutation goes through ``record_*`` methods, each of which appends
    exactly one event; ``Session.replay`` rebuilds the session from those
    events.
    """

    def __init__(self, session_id: str, catalog: list[StimulusSpec], seed: int,
                 schedule_config: ScheduleConfig | None = None,
                 clock: Callable[[], str] | None = None):
        if len(catalog) != N_STIMULI:
            raise ConfigurationError(
                f"catalog must contain exactly {N_STIMULI} stimuli, got {len(catalog)}")
        ids = sorted(s.id for s in catalog)
        if ids != list(range(N_STIMULI)):
            raise ConfigurationError("catalog ids must be 0..14 with no repeats")
        self.session_id = session_id
        self.catalog = list(catalog)
        self.seed = int(seed)
        self.schedule_config = schedule_config or ScheduleConfig()
        self._clock = clock or _utc_now

        self.phase = Phase.FAMILIARIZATION
        order = _rng(self.seed, _STREAM_GROUPS).permutation(N_STIMULI)
        self.groups: list[list[int]] = [
            [int(x) for x in order[g * GROUP_SIZE:(g + 1) * GROUP_SIZE]]
            for g in range(N_GROUPS)
        ]
        self.familiarization_order: list[int] = [
            int(x) for x in _rng(self.seed, _STREAM_FAMILIARIZATION).permutation(N_STIMULI)
        ]
        self.group_picks: dict[int, tuple[int, int]] = {}
        self.anchors: tuple[int, int] | None = None
        self.ratings: dict[int, LikertRating] = {}
        self.rating_order: list[int] = []
        self.schedule: ComparisonSchedule | None = None
        self.choices: list[ChoiceRecord] = []
        self.events: list[Event] = []

    # --- construction -------------------------------------------------

    @classmethod
    def start(cls, catalog: list[StimulusSpec] | None = None, seed: int = 0,
              session_id: str = "session", schedule_config: ScheduleConfig | None = None,
              clock: Callable[[], str] | None = None) -> "Session":
        catalog = default_catalog() if catalog is None else catalog
        session = cls(session_id, catalog, seed, schedule_config, clock)
        session._emit("session_started", {
            "seed": session.seed,
            "catalog_ids": [s.id for s in catalog],
            "schedule_rules": {str(g): r for g, r in
                               sorted(session.schedule_config.repeats_by_gap.items())},
        })
        return session

    @classmethod
    def replay(cls, events: list[Event], catalog: list[StimulusSpec] | None = None,
               clock: Callable[[], str] | None = None) -> "Session":
        if not events or events[0].type != "session_started":
            raise ProtocolError("event log must begin with session_started")
        head = events[0]
        catalog = default_catalog() if catalog is None else catalog
        rules = {int(g): int(r) for g, r in head.payload["schedule_rules"].items()}
        session = cls(head.session_id, catalog, head.payload["seed"],
                      ScheduleConfig(repeats_by_gap=rules), clock)
        if head.payload["catalog_ids"] != [s.id for s in catalog]:
            raise ConfigurationError("catalog does not match the one recorded in the log")
        session.events.append(head)
        for event in events[1:]:
            session._apply(event)
            session.events.append(event)
        return session

    # --- event plumbing -------------------------------------------------

    def _emit(self, type_: str, payload: dict) -> Event:
        event = Event(ts=self._clock(), session_id=self.session_id,
                      type=type_, payload=payload)
        self.events.append(event)
        return event

    def _apply(self, event: Event) -> None:
        """Re-apply a stored event during replay (no new event is emitted)."""
        handlers = {
            "familiarization_confirmed": lambda p: self._do_confirm_familiarization(),
            "group_extremes_recorded": lambda p: self._do_group_extremes(
                p["group_index"], p["most_pleasant"], p["most_unpleasant"]),
            "anchors_recorded": lambda p: self._do_anchors(p["best"], p["worst"]),
            "rating_recorded": lambda p: self._do_rating(p["stimulus_id"], p["value"]),
            "choice_recorded": lambda p: self._do_choice(
                (p["id_a"], p["id_b"]), p["winner"]),
        }
        if event.type in PASSIVE_EVENT_TYPES:
            return
        if event.type == "session_started":
            raise ProtocolError("duplicate session_started event")
        if event.type not in handlers:
            raise ProtocolError(f"unknown event type {event.type!r}")
        handlers[event.type](event.payload)

    def append_passive_event(self, type_: str, payload: dict) -> Event:
        """Log an event that does not advance the protocol (presenter traffic)."""
        if type_ not in PASSIVE_EVENT_TYPES:
            raise ProtocolError(f"{type_!r} is not a passive event type")
        return self._emit(type_, payload)

    def _require_phase(self, phase: Phase) -> None:
        if self.phase is not phase:
            raise PhaseError(
                f"operation requires phase {phase.value}, session is in {self.phase.value}")

    # --- transitions ----------------------------------------------------

    def confirm_familiarization(self) -> "Session":
        """Participant has experienced all stimuli; move to group extremes."""
        self._do_confirm_familiarization()
        self._emit("familiarization_confirmed", {})
        return self

    def _do_confirm_familiarization(self) -> None:
        self._require_phase(Phase.FAMILIARIZATION)
        self.phase = Phase.GROUP_EXTREMES

    def record_group_extremes(self, group_index: int, most_pleasant: int,
                              most_unpleasant: int) -> "Session":
        self._do_group_extremes(group_index, most_pleasant, most_unpleasant)
        self._emit("group_extremes_recorded", {
            "group_index": group_index,
            "most_pleasant": most_pleasant,
            "most_unpleasant": most_unpleasant,
        })
        return self

    def _do_group_extremes(self, group_index: int, most_pleasant: int,
                           most_unpleasant: int) -> None:
        self._require_phase(Phase.GROUP_EXTREMES)
        if not (0 <= group_index < N_GROUPS):
            raise ProtocolError(f"group index {group_index} out of range")
        if group_index in self.group_picks:
            raise DuplicateResponseError(f"group {group_index} already answered")
        group = self.groups[group_index]
        if most_pleasant not in group or most_unpleasant not in group:
            raise ProtocolError(
                f"stimuli {most_pleasant}/{most_unpleasant} not both in group "
                f"{group_index} = {group}")
        if most_pleasant == most_unpleasant:
            raise ProtocolError("most pleasant and most unpleasant must differ")
        self.group_picks[group_index] = (most_pleasant, most_unpleasant)
        if len(self.group_picks) == N_GROUPS:
            self.phase = Phase.ANCHOR_SELECTION

    @property
    def pleasant_candidates(self) -> list[int]:
        ordered = [self.group_picks[g][0] for g in sorted(self.group_picks)]
        return list(dict.fromkeys(ordered))

    @property
    def unpleasant_candidates(self) -> list[int]:
        ordered = [self.group_picks[g][1] for g in sorted(self.group_picks)]
        return list(dict.fromkeys(ordered))

    def record_anchors(self, best: int, worst: int) -> "Session":
        self._do_anchors(best, worst)
        self._emit("anchors_recorded", {"best": best, "worst": worst})
        return self

    def _do_anchors(self, best: int, worst: int) -> None:
        self._require_phase(Phase.ANCHOR_SELECTION)
        if best not in self.pleasant_candidates:
            raise ProtocolError(f"{best} is not among the pleasant candidates")
        if worst not in self.unpleasant_candidates:
            raise ProtocolError(f"{worst} is not among the unpleasant candidates")
        if best == worst:
            raise ProtocolError("anchors must be two different stimuli")
        self.anchors = (best, worst)
        self.ratings[best] = LikertRating(best, RATING_MAX, is_anchor=True)
        self.ratings[worst] = LikertRating(worst, RATING_MIN, is_anchor=True)
        remaining = sorted(set(range(N_STIMULI)) - {best, worst})
        order = _rng(self.seed, _STREAM_RATING_ORDER).permutation(len(remaining))
        self.rating_order = [remaining[int(k)] for k in order]
        self.phase = Phase.LIKERT_RATING

    def record_rating(self, stimulus_id: int, value: int) -> "Session":
        self._do_rating(stimulus_id, value)
        self._emit("rating_recorded", {"stimulus_id": stimulus_id, "value": value})
        return self

    def _do_rating(self, stimulus_id: int, value: int) -> None:
        self._require_phase(Phase.LIKERT_RATING)
        if not (0 <= stimulus_id < N_STIMULI):
            raise ProtocolError(f"unknown stimulus {stimulus_id}")
        if stimulus_id in self.ratings:
            if self.ratings[stimulus_id].is_anchor:
                raise ProtocolError(f"stimulus {stimulus_id} is an anchor and is not re-rated")
            raise DuplicateResponseError(f"stimulus {stimulus_id} already rated")
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise ProtocolError(f"rating must be an integer, got {value!r}")
        if not (RATING_MIN <= value <= RATING_MAX):
            raise ProtocolError(f"rating {value} outside [{RATING_MIN}, {RATING_MAX}]")
        self.ratings[stimulus_id] = LikertRating(stimulus_id, int(value))
        if len(self.ratings) == N_STIMULI:
            self.schedule = build_schedule(
                {sid: r.value for sid, r in self.ratings.items()},
                self.seed, self.schedule_config.repeats_by_gap)
            self.phase = (Phase.PAIRWISE_COMPARISON if self.schedule.trials
                          else Phase.COMPLETE)

    def record_choice(self, pair: tuple[int, int], winner: int) -> "Session":
        self._do_choice(pair, winner)
        record = self.choices[-1]
        self._emit("choice_recorded", {
            "trial_index": record.trial_index,
            "id_a": record.id_a, "id_b": record.id_b, "winner": record.winner,
        })
        return self

    def _do_choice(self, pair: tuple[int, int], winner: int) -> None:
        self._require_phase(Phase.PAIRWISE_COMPARISON)
        index = len(self.choices)
        trial = self.schedule.trials[index]
        offered = tuple(sorted(pair))
        if offered != trial.pair:
            raise SequencingError(
                f"expected trial {index} pair {trial.pair}, got {offered}")
        if winner not in trial.pair:
            raise ProtocolError(f"winner {winner} is not in pair {trial.pair}")
        self.choices.append(ChoiceRecord(
            trial_index=index, id_a=trial.id_left, id_b=trial.id_right, winner=winner))
        if len(self.choices) == len(self.schedule.trials):
            self.phase = Phase.COMPLETE

    # --- derived views ----------------------------------------------------

    def next_prompt(self) -> PromptDescriptor | None:
        """Phase-appropriate prompt, or None once the session is complete."""
        if self.phase is Phase.FAMILIARIZATION:
            return PromptDescriptor(
                phase=self.phase.value, kind="familiarize",
                stimulus_ids=tuple(self.familiarization_order),
                progress_done=0, progress_total=1)
        if self.phase is Phase.GROUP_EXTREMES:
            group_index = next(g for g in range(N_GROUPS) if g not in self.group_picks)
            return PromptDescriptor(
                phase=self.phase.value, kind="pick_group_extremes",
                stimulus_ids=tuple(self.groups[group_index]),
                progress_done=len(self.group_picks), progress_total=N_GROUPS,
                group_index=group_index)
        if self.phase is Phase.ANCHOR_SELECTION:
            pleasant = tuple(self.pleasant_candidates)
            unpleasant = tuple(self.unpleasant_candidates)
            return PromptDescriptor(
                phase=self.phase.value, kind="pick_anchors",
                stimulus_ids=pleasant + unpleasant,
                progress_done=0, progress_total=1,
                pleasant_candidates=pleasant, unpleasant_candidates=unpleasant)
        if self.phase is Phase.LIKERT_RATING:
            pending = [sid for sid in self.rating_order if sid not in self.ratings]
            done = len(self.rating_order) - len(pending)
            return PromptDescriptor(
                phase=self.phase.value, kind="rate",
                stimulus_ids=(pending[0],),
                progress_done=done, progress_total=len(self.rating_order),
                anchor_best=self.anchors[0], anchor_worst=self.anchors[1])
        if self.phase is Phase.PAIRWISE_COMPARISON:
            trial = self.schedule.trials[len(self.choices)]
            return PromptDescriptor(
                phase=self.phase.value, kind="choose",
                stimulus_ids=(trial.id_left, trial.id_right),
                progress_done=len(self.choices),
                progress_total=len(self.schedule.trials))
        return None

    def assemble_dataset(self) -> ComparisonDataset:
        """Observed outcomes from answered trials plus one synthetic outcome
        per omitted pair."""
        if self.phase is not Phase.COMPLETE:
            raise PhaseError("dataset is assembled once the session is complete")
        outcomes = [
            Outcome(winner=c.winner,
                    loser=c.id_a if c.winner == c.id_b else c.id_b,
                    provenance=Provenance.OBSERVED)
            for c in self.choices
        ]
        for om in self.schedule.omitted:
            loser = om.pair[0] if om.implied_winner == om.pair[1] else om.pair[1]
            outcomes.append(Outcome(winner=om.implied_winner, loser=loser,
                                    provenance=Provenance.SYNTHETIC))
        return ComparisonDataset(n_items=N_STIMULI, outcomes=tuple(outcomes))

    def rating_vector(self) -> np.ndarray:
        """Ratings aligned to stimulus ids 0..14 (the 'before' data)."""
        if len(self.ratings) != N_STIMULI:
            raise PhaseError("ratings are incomplete")
        return np.array([self.ratings[sid].value for sid in range(N_STIMULI)], dtype=float)

    # --- digests ----------------------------------------------------------

    def state_dict(self) -> dict:
        """Canonical JSON-compatible snapshot of the derived state."""
        schedule = None
        if self.schedule is not None:
            schedule = {
                "seed": self.schedule.seed,
                "trials": [[t.id_left, t.id_right, t.rep_index] for t in self.schedule.trials],
                "omitted": [[list(o.pair), o.implied_winner] for o in self.schedule.omitted],
            }
        return {
            "session_id": self.session_id,
            "seed": self.seed,
            "phase": self.phase.value,
            "schedule_rules": {str(g): r for g, r in
                               sorted(self.schedule_config.repeats_by_gap.items())},
            "catalog_ids": [s.id for s in self.catalog],
            "groups": self.groups,
            "familiarization_order": self.familiarization_order,
            "group_picks": {str(g): list(p) for g, p in sorted(self.group_picks.items())},
            "anchors": list(self.anchors) if self.anchors else None,
            "ratings": [[r.stimulus_id, r.value, r.is_anchor]
                        for r in (self.ratings[sid] for sid in sorted(self.ratings))],
            "rating_order": self.rating_order,
            "schedule": schedule,
            "choices": [[c.trial_index, c.id_a, c.id_b, c.winner] for c in self.choices],
        }

    def state_digest(self) -> str:
        raw = json.dumps(self.state_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(raw.encode()).hexdigest()


def dataset_digest(dataset: ComparisonDataset) -> str:
    lines = [f"{o.winner},{o.loser},{o.provenance.value}" for o in dataset.outcomes]
    raw = f"{dataset.n_items}\n" + "\n".join(lines)
    return hashlib.sha256(raw.encode()).hexdigest()


def estimate_digest(estimate: StrengthEstimate) -> str:
    parts = [repr(float(t)) for t in estimate.theta]
    if estimate.normalized_scores is None:
        parts.append("none")
    else:
        parts.extend(repr(float(s)) for s in estimate.normalized_scores)
    parts.append(f"{estimate.converged}:{estimate.iterations}")
    return hashlib.sha256("|".join(parts).encode()).hexdigest()
