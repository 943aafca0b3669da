"""Shared domain types: court geometry, frames, action labels, events and micro-events.

Channel order for every raw 22-channel series is fixed::

    ball.x, ball.y, home1.x, home1.y, ..., home5.y, away1.x, ..., away5.y

i.e. channel ``2 * entity + axis`` where entity 0 is the ball, 1-5 are the
home players and 6-10 are the away players, and axis 0/1 is x/y.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

N_PLAYERS = 5
N_ENTITIES = 1 + 2 * N_PLAYERS
N_RAW_CHANNELS = 2 * N_ENTITIES


@dataclass(frozen=True)
class CourtSpec:
    length_x: float = 94.0
    width_y: float = 50.0
    frame_rate: float = 25.0

    def __post_init__(self):
        for name in ("length_x", "width_y", "frame_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def frame_period(self) -> float:
        return 1.0 / self.frame_rate

    def frames_for(self, seconds: float) -> int:
        """Number of frames spanning ``seconds`` at this frame rate."""
        return int(round(seconds * self.frame_rate))


def channel_names() -> list[str]:
    names = []
    for entity in ["ball"] + [f"home{i}" for i in range(1, 6)] + [f"away{i}" for i in range(1, 6)]:
        names.append(f"{entity}.x")
        names.append(f"{entity}.y")
    return names


CHANNEL_NAMES = tuple(channel_names())


def channel_index(team: str, slot: int, axis: str) -> int:
    """Index of a raw channel. ``team`` is 'ball', 'home' or 'away'; ``slot`` is 1-5 for players."""
    axis_i = {"x": 0, "y": 1}[axis]
    if team == "ball":
        return axis_i
    if not 1 <= slot <= N_PLAYERS:
        raise ValueError(f"player slot must be in 1..5, got {slot}")
    base = {"home": 0, "away": N_PLAYERS}[team]
    return 2 * (1 + base + slot - 1) + axis_i


def is_x_channel(index: int) -> bool:
    return index % 2 == 0


class ActionLabel(enum.IntEnum):
    """Merged outcome class. The integer value doubles as the class order."""

    SHOT = 0
    FOUL = 1
    LOST_BALL = 2


class RawTag(enum.Enum):
    MAKE = "MAKE"
    MISS = "MISS"
    FOUL = "FOUL"
    OUT_OF_BOUND = "OOB"
    TURNOVER = "TURNOVER"
    STEAL = "STEAL"

    @property
    def label(self) -> ActionLabel:
        return _TAG_TO_LABEL[self]

    @classmethod
    def parse(cls, text: str) -> "RawTag":
        key = text.strip().upper()
        aliases = {"OUTOFBOUND": "OOB", "OUT_OF_BOUND": "OOB", "OUTOFBOUNDS": "OOB"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown action tag {text!r}") from None


_TAG_TO_LABEL = {
    RawTag.MAKE: ActionLabel.SHOT,
    RawTag.MISS: ActionLabel.SHOT,
    RawTag.FOUL: ActionLabel.FOUL,
    RawTag.OUT_OF_BOUND: ActionLabel.LOST_BALL,
    RawTag.TURNOVER: ActionLabel.LOST_BALL,
    RawTag.STEAL: ActionLabel.LOST_BALL,
}


Point = tuple[float, float]


@dataclass(frozen=True)
class Frame:
    """One tracking snapshot. Construction does not validate; see :func:`validate_frame`."""

    t: float
    ball: Point
    home: tuple[Point, ...]
    away: tuple[Point, ...]

    @classmethod
    def from_lists(cls, t, ball, home, away) -> "Frame":
        return cls(
            float(t),
            (float(ball[0]), float(ball[1])),
            tuple((float(x), float(y)) for x, y in home),
            tuple((float(x), float(y)) for x, y in away),
        )

    def coords(self) -> np.ndarray:
        """The 22 raw channel values of this frame in canonical order."""
        pts = [self.ball, *self.home, *self.away]
        return np.asarray(pts, dtype=float).reshape(-1)

    @classmethod
    def from_coords(cls, t: float, values) -> "Frame":
        v = np.asarray(values, dtype=float).reshape(N_ENTITIES, 2)
        pts = [(float(x), float(y)) for x, y in v]
        return cls(float(t), pts[0], tuple(pts[1:6]), tuple(pts[6:11]))


def validate_frame(f: Frame, spec: CourtSpec | None = None) -> list[str]:
    """Return all invariant violations of ``f`` (an empty list means the frame is fine)."""
    problems = []
    if len(f.home) != N_PLAYERS:
        problems.append(f"home count {len(f.home)} != {N_PLAYERS}")
    if len(f.away) != N_PLAYERS:
        problems.append(f"away count {len(f.away)} != {N_PLAYERS}")
    values = [f.t, *f.ball]
    for p in (*f.home, *f.away):
        values.extend(p)
    if not all(math.isfinite(v) for v in values):
        problems.append("non-finite coordinate")
    return problems


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Event:
    """Frames strictly after one logged action up to and including the next one."""

    event_id: int
    frames: tuple[Frame, ...]
    start_t: float
    end_t: float
    raw_tag: RawTag
    flip: bool = False

    def __post_init__(self):
        if not self.frames:
            raise ValueError("an event needs at least one frame")

    @property
    def label(self) -> ActionLabel:
        return self.raw_tag.label

    def __len__(self) -> int:
        return len(self.frames)

    def series(self, spec: CourtSpec | None = None) -> np.ndarray:
        """Raw (22, n_frames) array. With ``flip`` set, x is mirrored about mid-court."""
        arr = np.stack([f.coords() for f in self.frames], axis=1)
        if self.flip:
            length = (spec or CourtSpec()).length_x
            arr[0::2] = length - arr[0::2]
        return arr


@dataclass(frozen=True)
class MicroEvent:
    series: np.ndarray = field(repr=False)
    raw_tag: RawTag
    source_event_id: int
    offset_frames: int

    def __post_init__(self):
        object.__setattr__(self, "series", _frozen(self.series))
        if self.series.ndim != 2 or self.series.shape[0] != N_RAW_CHANNELS:
            raise ValueError(f"micro-event series must be ({N_RAW_CHANNELS}, W), got {self.series.shape}")

    @property
    def label(self) -> ActionLabel:
        return self.raw_tag.label

    @property
    def window(self) -> int:
        return self.series.shape[1]

    @property
    def id(self) -> str:
        return f"{self.source_event_id}:{self.offset_frames}"
