"""Hybrid Likert + pairwise-comparison preference elicitation with
Bradley-Terry scoring, for mid-air haptic stroking stimuli.

Subpackages: ``stimuli`` (catalog and trajectories), ``btmodel`` (strength
estimation), ``protocol`` (session state machine), ``analysis``
(before/after statistics), ``simulation`` (synthetic participants),
``service`` (HTTP API), ``cli`` (command line).
"""

from .btmodel import (
    ComparisonDataset,
    Outcome,
    Provenance,
    StrengthEstimate,
    backend_name,
    estimate_ilsr,
    estimate_mm,
    is_connected,
    log_likelihood,
    normalize_scores,
    win_probability,
)
from .protocol import ComparisonSchedule, Phase, Session, build_schedule
from .simulation import SyntheticParticipant, recovery_metrics, run_session
from .stimuli import StimulusSpec, default_catalog, generate_trajectory, lm_vibration_frequency

__version__ = "0.1.0"

__all__ = [
    "ComparisonDataset",
    "ComparisonSchedule",
    "Outcome",
    "Phase",
    "Provenance",
    "Session",
    "StimulusSpec",
    "StrengthEstimate",
    "SyntheticParticipant",
    "backend_name",
    "build_schedule",
    "default_catalog",
    "estimate_ilsr",
    "estimate_mm",
    "generate_trajectory",
    "is_connected",
    "lm_vibration_frequency",
    "log_likelihood",
    "normalize_scores",
    "recovery_metrics",
    "run_session",
    "win_probability",
    "__version__",
]
