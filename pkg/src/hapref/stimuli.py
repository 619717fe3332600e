"""Stimulus catalog and focal-point trajectory generation.

Fifteen stroking stimuli: five pattern kinds (static pressure, 200 Hz
amplitude modulation, low/high-frequency lateral modulation, two-point)
crossed with three stroke speeds (50, 100, 300 mm/s). Trajectories are pure
data: per-millisecond focal positions and relative amplitudes along a
150 mm stroke on the forearm, y from elbow (0) toward wrist, x lateral.

No hardware concerns live here; the tables produced by ``catalog_table``
and ``trajectory_table`` are the interchange format for plotting, the web
preview and any downstream driver.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

SPEEDS_MM_S = (50.0, 100.0, 300.0)
AM_FREQUENCY_HZ = 200.0
LM_WAVELENGTH_LOW_MM = 15.0
LM_WAVELENGTH_HIGH_MM = 1.5
LM_DISPLACEMENT_MM = 5.0
TWO_POINT_OFFSET_MM = 5.0
TRIAL_DURATION_S = 3.0
PATH_LENGTH_MM = 150.0
UPDATE_RATE_HZ = 1000


class Pattern(enum.Enum):
    STATIC = "static"
    AM = "am"
    LM_LOW = "lm_low"
    LM_HIGH = "lm_high"
    TWO_POINT = "two_point"


@dataclass(frozen=True)
class StimulusSpec:
    id: int
    pattern: Pattern
    speed_v: float  # mm/s
    am_frequency: float | None = None  # Hz
    lm_wavelength: float | None = None  # mm
    lm_displacement: float | None = None  # mm, lateral excursion is +/- this
    two_point_offset: float | None = None  # mm between focus centers
    duration: float = TRIAL_DURATION_S  # s
    path_length: float = PATH_LENGTH_MM  # mm
    update_rate: int = UPDATE_RATE_HZ  # Hz

    def __post_init__(self):
        if (self.am_frequency is not None) != (self.pattern is Pattern.AM):
            raise ConfigurationError("am_frequency is set iff pattern is AM")
        lm = self.pattern in (Pattern.LM_LOW, Pattern.LM_HIGH)
        if (self.lm_wavelength is not None) != lm or (self.lm_displacement is not None) != lm:
            raise ConfigurationError("lm parameters are set iff pattern is LM")
        if (self.two_point_offset is not None) != (self.pattern is Pattern.TWO_POINT):
            raise ConfigurationError("two_point_offset is set iff pattern is TWO_POINT")

    @property
    def n_foci(self) -> int:
        return 2 if self.pattern is Pattern.TWO_POINT else 1

    def describe(self) -> str:
        """Human-readable label used by the UI and exports."""
        if self.pattern is Pattern.AM:
            name = f"amplitude modulation {self.am_frequency:.0f} Hz"
        elif self.pattern in (Pattern.LM_LOW, Pattern.LM_HIGH):
            name = f"lateral modulation, wavelength {self.lm_wavelength:g} mm"
        elif self.pattern is Pattern.TWO_POINT:
            name = f"two-point, {self.two_point_offset:g} mm apart"
        else:
            name = "static pressure"
        return f"{name}, stroke {self.speed_v:.0f} mm/s"


@dataclass(frozen=True)
class Focus:
    x: float  # mm
    y: float  # mm
    amplitude: float  # relative, in [0, 1]


@dataclass(frozen=True)
class FocusFrame:
    t: float  # s
    foci: tuple[Focus, ...]


def default_catalog() -> list[StimulusSpec]:
    """The fifteen stimulus conditions, ids 0-14.

    Order is pattern-major (static, AM, LM low, LM high, two-point) and
    speed-minor (50, 100, 300 mm/s), so id = 3 * pattern_index + speed_index.
    """
    specs: list[StimulusSpec] = []
    for pattern in Pattern:
        for speed in SPEEDS_MM_S:
            kwargs = {}
            if pattern is Pattern.AM:
                kwargs["am_frequency"] = AM_FREQUENCY_HZ
            elif pattern is Pattern.LM_LOW:
                kwargs["lm_wavelength"] = LM_WAVELENGTH_LOW_MM
                kwargs["lm_displacement"] = LM_DISPLACEMENT_MM
            elif pattern is Pattern.LM_HIGH:
                kwargs["lm_wavelength"] = LM_WAVELENGTH_HIGH_MM
                kwargs["lm_displacement"] = LM_DISPLACEMENT_MM
            elif pattern is Pattern.TWO_POINT:
                kwargs["two_point_offset"] = TWO_POINT_OFFSET_MM
            specs.append(StimulusSpec(id=len(specs), pattern=pattern, speed_v=speed, **kwargs))
    return specs


def lm_vibration_frequency(v: float, wavelength: float) -> float:
    """Vibration frequency perceived under lateral modulation: v / wavelength."""
    if v <= 0 or wavelength <= 0:
        raise ValueError(f"speed and wavelength must be positive, got v={v}, wavelength={wavelength}")
    return v / wavelength


def lm_lateral_offset(y: float | np.ndarray, wavelength: float, displacement: float):
    """Closed-form lateral excursion at stroke position y."""
    return displacement * np.sin(2.0 * math.pi * np.asarray(y, dtype=float) / wavelength)


def stroke_positions(spec: StimulusSpec, stroke_repeat: str = "wrap") -> np.ndarray:
    """Stroke coordinate y(t) at each update tick.

    ``wrap`` restarts the stroke at the elbow once it passes the far end;
    ``clamp`` holds the focus at the last in-range grid position. Both keep
    y in [0, path_length).
    """
    if stroke_repeat not in ("wrap", "clamp"):
        raise ConfigurationError(f"stroke_repeat must be 'wrap' or 'clamp', got {stroke_repeat!r}")
    n = round(spec.duration * spec.update_rate)
    t = np.arange(n) / spec.update_rate
    y = spec.speed_v * t
    if stroke_repeat == "wrap":
        return np.mod(y, spec.path_length)
    return np.minimum(y, spec.path_length - spec.speed_v / spec.update_rate)


def generate_trajectory(spec: StimulusSpec, stroke_repeat: str = "wrap") -> list[FocusFrame]:
    """Sampled focal-point trajectory: duration * update_rate frames.

    Static: one focus on the stroke axis at constant amplitude. AM: same
    path, amplitude 0.5 * (1 + sin(2 pi f t)). LM: focus offset laterally by
    d * sin(2 pi y / wavelength). Two-point: two constant-amplitude foci
    straddling the axis, offset/2 to each side.
    """
    y = stroke_positions(spec, stroke_repeat)
    n = y.shape[0]
    t = np.arange(n) / spec.update_rate

    if spec.pattern is Pattern.AM:
        amplitude = 0.5 * (1.0 + np.sin(2.0 * math.pi * spec.am_frequency * t))
    else:
        amplitude = np.ones(n)

    if spec.pattern in (Pattern.LM_LOW, Pattern.LM_HIGH):
        x = lm_lateral_offset(y, spec.lm_wavelength, spec.lm_displacement)
    else:
        x = np.zeros(n)

    frames: list[FocusFrame] = []
    if spec.pattern is Pattern.TWO_POINT:
        half = spec.two_point_offset / 2.0
        for k in range(n):
            frames.append(FocusFrame(t=t[k], foci=(
                Focus(-half, y[k], 1.0),
                Focus(+half, y[k], 1.0),
            )))
    else:
        for k in range(n):
            frames.append(FocusFrame(t=t[k], foci=(Focus(x[k], y[k], amplitude[k]),)))
    return frames


# --- tabular exports ---------------------------------------------------

CATALOG_COLUMNS = ("id", "pattern", "speed_mm_s", "am_hz", "lambda_mm", "d_mm", "offset_mm", "duration_s")
TRAJECTORY_COLUMNS = ("t_s", "focus_index", "x_mm", "y_mm", "amplitude")


def catalog_table(catalog: list[StimulusSpec] | None = None) -> list[dict]:
    catalog = default_catalog() if catalog is None else catalog
    return [
        {
            "id": s.id,
            "pattern": s.pattern.value,
            "speed_mm_s": s.speed_v,
            "am_hz": s.am_frequency,
            "lambda_mm": s.lm_wavelength,
            "d_mm": s.lm_displacement,
            "offset_mm": s.two_point_offset,
            "duration_s": s.duration,
        }
        for s in catalog
    ]


def trajectory_table(spec: StimulusSpec, stroke_repeat: str = "wrap") -> list[dict]:
    rows = []
    for frame in generate_trajectory(spec, stroke_repeat):
        for idx, focus in enumerate(frame.foci):
            rows.append({
                "t_s": frame.t,
                "focus_index": idx,
                "x_mm": focus.x,
                "y_mm": focus.y,
                "amplitude": focus.amplitude,
            })
    return rows


def _write_csv(rows: list[dict], columns: tuple[str, ...], fp) -> None:
    writer = csv.DictWriter(fp, fieldnames=columns)
    writer.writeheader()
    for row in rows:
        writer.writerow({c: ("" if row[c] is None else row[c]) for c in columns})


def write_catalog_csv(path: str, catalog: list[StimulusSpec] | None = None) -> None:
    with open(path, "w", newline="") as fp:
        _write_csv(catalog_table(catalog), CATALOG_COLUMNS, fp)


def catalog_json(catalog: list[StimulusSpec] | None = None) -> str:
    return json.dumps(catalog_table(catalog), indent=2)


def write_trajectory_csv(path: str, spec: StimulusSpec, stroke_repeat: str = "wrap") -> None:
    with open(path, "w", newline="") as fp:
        _write_csv(trajectory_table(spec, stroke_repeat), TRAJECTORY_COLUMNS, fp)


def trajectory_csv(spec: StimulusSpec, stroke_repeat: str = "wrap") -> str:
    buf = io.StringIO()
    _write_csv(trajectory_table(spec, stroke_repeat), TRAJECTORY_COLUMNS, buf)
    return buf.getvalue()
