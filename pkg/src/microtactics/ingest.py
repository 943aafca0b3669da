"""Reading tracking and play-by-play files, cutting them into events, and synthetic data.

Tracking files are line-delimited JSON, one frame per line::

    {"t": 12.04, "ball": [x, y], "home": [[x, y], ...5], "away": [[x, y], ...5]}

Play-by-play files are CSV with header ``t,period,action`` where action is one
of MAKE, MISS, FOUL, OOB, TURNOVER, STEAL (case-insensitive).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .court import (
    N_ENTITIES,
    ActionLabel,
    CourtSpec,
    Event,
    Frame,
    RawTag,
    validate_frame,
)

MAX_INTERPOLATED_GAP = 3
_TIME_EPS = 1e-6


class TrackingFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PbpAction:
    period: int
    t: float
    raw_tag: RawTag = field(compare=False)

    @property
    def label(self) -> ActionLabel:
        return self.raw_tag.label


# -- tracking ---------------------------------------------------------------


def _point(value, what: str, lineno: int) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise TrackingFormatError(lineno, f"{what} must be an [x, y] pair, got {value!r}")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise TrackingFormatError(lineno, f"{what} has non-numeric coordinates {value!r}") from None


def _parse_frame_line(line: str, lineno: int) -> Frame:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TrackingFormatError(lineno, f"malformed JSON ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise TrackingFormatError(lineno, "record must be a JSON object")
    missing = {"t", "ball", "home", "away"} - rec.keys()
    if missing:
        raise TrackingFormatError(lineno, f"missing fields {sorted(missing)}")
    try:
        t = float(rec["t"])
    except (TypeError, ValueError):
        raise TrackingFormatError(lineno, f"bad time {rec['t']!r}") from None

    ball = _point(rec["ball"], "ball", lineno)
    teams = []
    for team in ("home", "away"):
        entries = rec[team]
        if not isinstance(entries, list):
            raise TrackingFormatError(lineno, f"{team} must be a list of [x, y] pairs")
        teams.append(tuple(_point(p, f"{team}[{i}]", lineno) for i, p in enumerate(entries)))
    frame = Frame(t, ball, teams[0], teams[1])

    n_coords = 2 * (1 + len(frame.home) + len(frame.away))
    if n_coords != 2 * N_ENTITIES:
        raise TrackingFormatError(lineno, f"expected {2 * N_ENTITIES} coordinates, got {n_coords}")
    problems = validate_frame(frame)
    if problems:
        raise TrackingFormatError(lineno, "; ".join(problems))
    return frame


def _interpolate(a: Frame, b: Frame, steps: int) -> list[Frame]:
    ca, cb = a.coords(), b.coords()
    out = []
    for j in range(1, steps):
        w = j / steps
        out.append(Frame.from_coords(a.t + w * (b.t - a.t), (1 - w) * ca + w * cb))
    return out


def parse_tracking(stream: Iterable[str], spec: CourtSpec | None = None) -> list[list[Frame]]:
    """Parse a tracking stream into contiguous segments of frames.

    Gaps of up to three missing frames are filled by linear interpolation;
    a longer gap ends the current segment and starts a new one. Blank lines
    are skipped.
    """
    spec = spec or CourtSpec()
    segments: list[list[Frame]] = []
    current: list[Frame] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        frame = _parse_frame_line(line, lineno)
        if current:
            prev = current[-1]
            if frame.t <= prev.t:
                raise TrackingFormatError(lineno, f"time {frame.t} does not increase (previous {prev.t})")
            steps = int(round((frame.t - prev.t) * spec.frame_rate))
            if steps < 1:
                raise TrackingFormatError(
                    lineno, f"frame spacing {frame.t - prev.t:.4f}s is below one frame period"
                )
            missing = steps - 1
            if missing > MAX_INTERPOLATED_GAP:
                segments.append(current)
                current = []
            elif missing > 0:
                current.extend(_interpolate(prev, frame, steps))
        current.append(frame)
    if current:
        segments.append(current)
    return segments


def write_tracking(frames: Iterable[Frame], fh) -> None:
    for f in frames:
        rec = {
            "t": f.t,
            "ball": list(f.ball),
            "home": [list(p) for p in f.home],
            "away": [list(p) for p in f.away],
        }
        fh.write(json.dumps(rec) + "\n")


# -- play by play -----------------------------------------------------------


def parse_pbp(stream: Iterable[str]) -> list[PbpAction]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or not {"t", "period", "action"} <= {
        name.strip() for name in reader.fieldnames
    }:
        raise ValueError("play-by-play CSV needs the header t,period,action")
    actions = []
    for row in reader:
        row = {k.strip(): v for k, v in row.items() if k is not None}
        lineno = reader.line_num
        try:
            tag = RawTag.parse(row["action"])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        try:
            t = float(row["t"])
            period = int(row["period"])
        except (TypeError, ValueError):
            raise ValueError(f"line {lineno}: bad time or period in {row!r}") from None
        if not math.isfinite(t):
            raise ValueError(f"line {lineno}: non-finite time")
        actions.append(PbpAction(period, t, tag))
    ordered = sorted(actions)
    if ordered != actions:
        warnings.warn("play-by-play rows were not sorted by (period, t); sorting them", stacklevel=2)
    return ordered


def write_pbp(actions: Iterable[PbpAction], fh) -> None:
    fh.write("t,period,action\n")
    for a in actions:
        fh.write(f"{a.t!r},{a.period},{a.raw_tag.value}\n")


# -- alignment --------------------------------------------------------------


def _flatten(frames) -> list[Frame]:
    frames = list(frames)
    if frames and isinstance(frames[0], (list, tuple)) and not isinstance(frames[0], Frame):
        return [f for seg in frames for f in seg]
    return frames


def align(frames, actions: Sequence[PbpAction], spec: CourtSpec | None = None) -> list[Event]:
    """Cut frames into one event per consecutive pair of actions.

    The event for ``(a_i, a_next)`` holds the frames with
    ``a_i.t < t <= a_next.t`` and carries ``a_next``'s tag. Pairs that span
    two periods are skipped. ``frames`` may be a flat list or the segment
    list returned by :func:`parse_tracking`.
    """
    spec = spec or CourtSpec()
    frames = _flatten(frames)
    if not frames or not actions:
        raise AlignmentError("align needs at least one frame and one action")
    times = np.array([f.t for f in frames])
    if np.any(np.diff(times) <= 0):
        raise AlignmentError("frame times must be strictly increasing")
    actions = sorted(actions)
    if actions[-1].t < times[0] or actions[0].t > times[-1]:
        raise AlignmentError(
            f"frame times [{times[0]}, {times[-1]}] and action times "
            f"[{actions[0].t}, {actions[-1].t}] do not overlap"
        )

    period = spec.frame_period
    events: list[Event] = []
    for a, b in zip(actions, actions[1:]):
        if a.period != b.period:
            continue
        lo = int(np.searchsorted(times, a.t + _TIME_EPS, side="right"))
        hi = int(np.searchsorted(times, b.t + _TIME_EPS, side="right"))
        if hi <= lo:
            warnings.warn(f"no frames between actions at t={a.t} and t={b.t}; event dropped", stacklevel=2)
            continue
        # keep only the contiguous run that ends at the terminal action
        gaps = np.nonzero(np.abs(np.diff(times[lo:hi]) - period) > period / 2)[0]
        if gaps.size:
            warnings.warn(
                f"event ending at t={b.t} spans a tracking gap; keeping the final contiguous run",
                stacklevel=2,
            )
            lo = lo + int(gaps[-1]) + 1
        if b.t - times[hi - 1] > period / 2 + _TIME_EPS:
            warnings.warn(
                f"tracking ends {b.t - times[hi - 1]:.3f}s before the action at t={b.t}; event dropped",
                stacklevel=2,
            )
            continue
        events.append(Event(len(events), tuple(frames[lo:hi]), a.t, b.t, b.raw_tag))
    return events


# -- synthetic data ---------------------------------------------------------

BASKET = (89.0, 25.0)
ACTION_ONSET = 0.6


@dataclass(frozen=True)
class SynthConfig:
    n_events_per_class: int = 30
    event_duration_range: tuple[float, float] = (2.0, 4.0)
    noise_sigma: float = 1.0
    seed: int = 0
    spec: CourtSpec = field(default_factory=CourtSpec)

    def __post_init__(self):
        if int(self.n_events_per_class) < 1:
            raise ValueError("n_events_per_class must be at least 1")
        lo, hi = self.event_duration_range
        if not (1.0 < lo <= hi <= 30.0):
            raise ValueError(f"event_duration_range must lie in (1, 30] seconds, got {self.event_duration_range}")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class SynthEvent:
    """Parameters of one synthetic event; positions follow from :func:`render_event`."""

    label: ActionLabel
    raw_tag: RawTag
    start_frame: int
    n_frames: int
    base: np.ndarray  # (11, 2) anchor positions
    amp: np.ndarray  # (11, 2) wander amplitudes, feet
    freq: np.ndarray  # (11, 2) wander frequencies, Hz
    phase: np.ndarray  # (11, 2)
    reach: float  # LostBall: distance the ball travels back toward low x


_SHOT_TAGS = (RawTag.MAKE, RawTag.MISS)
_LOST_TAGS = (RawTag.OUT_OF_BOUND, RawTag.TURNOVER, RawTag.STEAL)


def synthetic_plan(cfg: SynthConfig) -> tuple[RawTag, list[SynthEvent]]:
    """Draw the opening action tag and the per-event parameters for ``cfg``."""
    plan_seed, _ = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(plan_seed)
    fr = cfg.spec.frame_rate
    classes = np.repeat(np.arange(3), cfg.n_events_per_class)
    rng.shuffle(classes)
    opening = list(RawTag)[int(rng.integers(len(RawTag)))]

    lo_frames = max(int(math.floor(cfg.event_duration_range[0] * fr)), 1)
    hi_frames = max(int(math.floor(cfg.event_duration_range[1] * fr)), lo_frames)
    events = []
    start = 1
    for c in classes:
        label = ActionLabel(int(c))
        if label is ActionLabel.SHOT:
            tag = _SHOT_TAGS[int(rng.integers(2))]
        elif label is ActionLabel.FOUL:
            tag = RawTag.FOUL
        else:
            tag = _LOST_TAGS[int(rng.integers(3))]
        n = int(rng.integers(lo_frames, hi_frames + 1))
        base = np.column_stack([rng.uniform(10, 84, N_ENTITIES), rng.uniform(5, 45, N_ENTITIES)])
        base[0, 0] = rng.uniform(30, 65)
        ev = SynthEvent(
            label=label,
            raw_tag=tag,
            start_frame=start,
            n_frames=n,
            base=base,
            amp=rng.uniform(0.5, 3.0, (N_ENTITIES, 2)),
            freq=rng.uniform(0.2, 0.6, (N_ENTITIES, 2)),
            phase=rng.uniform(0, 2 * np.pi, (N_ENTITIES, 2)),
            reach=float(rng.uniform(20, 30)),
        )
        events.append(ev)
        start += n
    return opening, events


def render_event(ev: SynthEvent, frame_rate: float) -> np.ndarray:
    """Noise-free positions of one synthetic event as an (n_frames, 11, 2) array.

    All classes share a wandering build-up; over the last 40% of the event:
    Shot moves the ball to the high-x basket while home players close half the
    distance; Foul drives home1 and away1 into contact at their midpoint
    (reached half-way through the phase) and freezes the ball; LostBall sends
    the ball ``reach`` feet toward low x with the away team following half-way.
    """
    tau = np.arange(1, ev.n_frames + 1) / frame_rate
    total = ev.n_frames / frame_rate
    onset = ACTION_ONSET * total
    u = np.clip((tau - onset) / (total - onset), 0.0, 1.0)[:, None, None]

    def wander(tt):
        return ev.base + ev.amp * np.sin(2 * np.pi * ev.freq * tt[:, None, None] + ev.phase)

    pos = wander(tau)
    basket = np.array(BASKET)
    if ev.label is ActionLabel.SHOT:
        pos[:, 0] += u[:, 0] * (basket - ev.base[0])
        pos[:, 1:6] += 0.5 * u * (basket - ev.base[1:6])
    elif ev.label is ActionLabel.FOUL:
        pos[:, 0] = wander(np.minimum(tau, onset))[:, 0]
        meet = 0.5 * (ev.base[1] + ev.base[6])
        contact = np.minimum(2 * u[:, 0], 1.0)
        pos[:, 1] += contact * (meet - ev.base[1])
        pos[:, 6] += contact * (meet - ev.base[6])
    else:
        pos[:, 0, 0] -= u[:, 0, 0] * ev.reach
        pos[:, 6:, 0] -= 0.5 * u[:, :, 0] * ev.reach
    return pos


def generate_synthetic(cfg: SynthConfig) -> tuple[list[Frame], list[PbpAction]]:
    """Seeded synthetic tracking stream plus its play-by-play log (3 * n events)."""
    fr = cfg.spec.frame_rate
    opening, plan = synthetic_plan(cfg)
    _, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    noise_rng = np.random.default_rng(noise_seed)

    frames: list[Frame] = []
    actions = [PbpAction(1, 0.0, opening)]
    for ev in plan:
        pos = render_event(ev, fr)
        noise = noise_rng.normal(0.0, 1.0, pos.shape)
        if cfg.noise_sigma > 0:
            pos = pos + cfg.noise_sigma * noise
        for j in range(ev.n_frames):
            k = ev.start_frame + j
            frames.append(Frame.from_coords(k / fr, pos[j]))
        actions.append(PbpAction(1, (ev.start_frame + ev.n_frames - 1) / fr, ev.raw_tag))
    return frames, actions


def ball_direction_rule(event: Event, threshold: float = 10.0) -> ActionLabel:
    """Hand-written baseline: label an event by the ball's net x displacement."""
    dx = event.frames[-1].ball[0] - event.frames[0].ball[0]
    if dx > threshold:
        return ActionLabel.SHOT
    if dx < -threshold:
        return ActionLabel.LOST_BALL
    return ActionLabel.FOUL


__all__ = [
    "AlignmentError",
    "PbpAction",
    "SynthConfig",
    "SynthEvent",
    "TrackingFormatError",
    "align",
    "ball_direction_rule",
    "generate_synthetic",
    "parse_pbp",
    "parse_tracking",
    "render_event",
    "synthetic_plan",
    "write_pbp",
    "write_tracking",
]
