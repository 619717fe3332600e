"""Runtime configuration: INI file with sections, environment overrides.

Sections and keys::

    [schedule]
    gap_0 = 2          # comparisons for pairs with equal ratings
    gap_1 = 1          # comparisons for pairs one level apart

    [bt]
    alpha = 0.01       # pseudo-wins per ordered pair
    tol = 1e-8
    max_iter = 10000
    normalize_on = log # log | natural

    [presenter]
    sink = log         # log | file | stream
    path = trajectories.ndjson
    host = 127.0.0.1
    port = 9750

    [service]
    port = 8000
    data_dir = ./hapref-data
    experimenter_token =

Any key can be overridden by an environment variable named
``HAPREF_<SECTION>__<KEY>`` (double underscore between section and key),
e.g. ``HAPREF_BT__ALPHA=0.05``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError

ENV_PREFIX = "HAPREF_"


@dataclass(frozen=True)
class ScheduleConfig:
    # repetition count per absolute rating gap; gaps not listed are omitted
    repeats_by_gap: dict[int, int] = field(default_factory=lambda: {0: 2, 1: 1})

    def __post_init__(self):
        for gap, reps in self.repeats_by_gap.items():
            if gap < 0 or reps < 0:
                raise ConfigurationError(
                    f"invalid schedule rule gap_{gap} = {reps}: both must be >= 0"
                )


@dataclass(frozen=True)
class BTConfig:
    alpha: float = 0.01
    tol: float = 1e-8
    max_iter: int = 10_000
    normalize_on: str = "log"  # log | natural

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError("bt.alpha must be >= 0")
        if self.tol <= 0:
            raise ConfigurationError("bt.tol must be > 0")
        if self.max_iter <= 0:
            raise ConfigurationError("bt.max_iter must be > 0")
        if self.normalize_on not in ("log", "natural"):
            raise ConfigurationError("bt.normalize_on must be 'log' or 'natural'")


@dataclass(frozen=True)
class PresenterConfig:
    sink: str = "log"  # log | file | stream
    path: str = "trajectories.ndjson"
    host: str = "127.0.0.1"
    port: int = 9750

    def __post_init__(self):
        if self.sink not in ("log", "file", "stream"):
            raise ConfigurationError("presenter.sink must be log, file or stream")


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    data_dir: str = "./hapref-data"
    experimenter_token: str = ""


@dataclass(frozen=True)
class AppConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    bt: BTConfig = field(default_factory=BTConfig)
    presenter: PresenterConfig = field(default_factory=PresenterConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)


def _coerce(text: str, like) -> object:
    if isinstance(like, bool):
        return text.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def _apply_section(defaults, items: dict[str, str]):
    """Overlay string key/value pairs onto a config dataclass."""
    kwargs = {}
    repeats = dict(getattr(defaults, "repeats_by_gap", {}) or {})
    repeats_touched = False
    for key, raw in items.items():
        key = key.lower()
        if key.startswith("gap_"):
            try:
                gap = int(key[4:])
                reps = int(raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad schedule rule {key} = {raw!r}") from exc
            if reps == 0:
                repeats.pop(gap, None)
            else:
                repeats[gap] = reps
            repeats_touched = True
            continue
        if not hasattr(defaults, key):
            raise ConfigurationError(
                f"unknown config key {key!r} for section "
                f"[{type(defaults).__name__.replace('Config', '').lower()}]"
            )
        try:
            kwargs[key] = _coerce(raw, getattr(defaults, key))
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    if repeats_touched:
        kwargs["repeats_by_gap"] = repeats
    return replace(defaults, **kwargs) if kwargs else defaults


_SECTIONS = ("schedule", "bt", "presenter", "service")


def load_config(path: str | None = None, env: dict[str, str] | None = None) -> AppConfig:
    """Build an AppConfig from an optional INI file plus environment overrides."""
    env = os.environ if env is None else env
    file_items: dict[str, dict[str, str]] = {name: {} for name in _SECTIONS}

    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigurationError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in _SECTIONS:
                raise ConfigurationError(f"unknown config section [{section}]")
            file_items[section].update(dict(parser.items(section)))

    for name, value in env.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section, _, key = name[len(ENV_PREFIX):].partition("__")
        section = section.lower()
        if section in _SECTIONS:
            file_items[section][key.lower()] = value

    cfg = AppConfig()
    return AppConfig(
        schedule=_apply_section(cfg.schedule, file_items["schedule"]),
        bt=_apply_section(cfg.bt, file_items["bt"]),
        presenter=_apply_section(cfg.presenter, file_items["presenter"]),
        service=_apply_section(cfg.service, file_items["service"]),
    )
