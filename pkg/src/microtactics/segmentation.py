"""Duration filtering and sliding-window slicing of events into micro-events."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .court import ActionLabel, CHANNEL_NAMES, CourtSpec, Event, MicroEvent, RawTag


@dataclass(frozen=True)
class WindowConfig:
    window_seconds: float = 1.0
    stride_seconds: float = 0.2
    min_event_seconds: float = 1.0

    def __post_init__(self):
        if not 0 < self.stride_seconds <= self.window_seconds <= self.min_event_seconds:
            raise ValueError(
                "need 0 < stride_seconds <= window_seconds <= min_event_seconds, got "
                f"{self.stride_seconds}, {self.window_seconds}, {self.min_event_seconds}"
            )

    def frames(self, spec: CourtSpec) -> tuple[int, int, int]:
        """(window, stride, minimum event length) in frames."""
        return (
            spec.frames_for(self.window_seconds),
            max(spec.frames_for(self.stride_seconds), 1),
            spec.frames_for(self.min_event_seconds),
        )


def filter_events(events: Iterable[Event], cfg: WindowConfig, spec: CourtSpec | None = None) -> list[Event]:
    _, _, min_frames = cfg.frames(spec or CourtSpec())
    return [e for e in events if len(e) >= min_frames]


def window_count(length: int, window: int, stride: int) -> int:
    if length < window:
        return 0
    return (length - window) // stride + 1


def slide_windows(event: Event, cfg: WindowConfig, spec: CourtSpec | None = None) -> list[MicroEvent]:
    spec = spec or CourtSpec()
    window, stride, _ = cfg.frames(spec)
    series = event.series(spec)
    return [
        MicroEvent(series[:, off : off + window], event.raw_tag, event.event_id, off)
        for off in range(0, stride * window_count(series.shape[1], window, stride), stride)
    ]


def segment(events: Iterable[Event], cfg: WindowConfig, spec: CourtSpec | None = None) -> list[MicroEvent]:
    """filter_events followed by slide_windows, ordered by (event id, offset)."""
    out = []
    for e in sorted(filter_events(events, cfg, spec), key=lambda e: e.event_id):
        out.extend(slide_windows(e, cfg, spec))
    return out


def census(micro_events: Iterable[MicroEvent]) -> dict[str, dict[str, int]]:
    """Counts per merged class and per raw tag (every class and tag present, zeros included)."""
    labels = Counter()
    tags = Counter()
    for m in micro_events:
        labels[m.label] += 1
        tags[m.raw_tag] += 1
    return {
        "label": {lab.name: labels[lab] for lab in ActionLabel},
        "raw_tag": {tag.value: tags[tag] for tag in RawTag},
    }


def stack(micro_events: Sequence[MicroEvent]) -> tuple[np.ndarray, np.ndarray]:
    """(N, 22, W) array and (N,) integer labels; all windows must share W."""
    widths = {m.window for m in micro_events}
    if len(widths) > 1:
        raise ValueError(f"micro-events have mixed window lengths {sorted(widths)}")
    if not micro_events:
        return np.zeros((0, len(CHANNEL_NAMES), 0)), np.zeros(0, dtype=int)
    x = np.stack([m.series for m in micro_events])
    y = np.array([int(m.label) for m in micro_events])
    return x, y


# -- micro-event dump -------------------------------------------------------


def dump_header(channel_names: Sequence[str], window: int) -> list[str]:
    cols = ["event_id", "offset", "label"]
    for name in channel_names:
        cols.extend(f"{name}@{t}" for t in range(window))
    return cols


def write_dump(fh, ids, labels, series: np.ndarray, channel_names: Sequence[str] = CHANNEL_NAMES) -> None:
    """Write a micro-event dump: event_id, offset, label, then channels x W values row-major.

    ``ids`` are (event_id, offset) pairs; ``labels`` are tag strings or ActionLabels.
    """
    series = np.asarray(series)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(dump_header(channel_names, series.shape[2]))
    for (eid, off), lab, s in zip(ids, labels, series):
        name = lab.name if isinstance(lab, ActionLabel) else str(lab)
        w.writerow([eid, off, name, *(repr(float(v)) for v in s.reshape(-1))])


def write_micro_events(fh, micro_events: Sequence[MicroEvent]) -> None:
    x, _ = stack(micro_events)
    write_dump(
        fh,
        [(m.source_event_id, m.offset_frames) for m in micro_events],
        [m.raw_tag.value for m in micro_events],
        x,
    )


@dataclass
class Dump:
    ids: list[str]
    labels: list[str]
    series: np.ndarray  # (N, C, W)
    channel_names: list[str]


def read_dump(fh) -> Dump:
    reader = csv.reader(fh)
    header = next(reader)
    if header[:3] != ["event_id", "offset", "label"]:
        raise ValueError("micro-event dump must start with event_id,offset,label")
    names = []
    times = set()
    for col in header[3:]:
        name, _, t = col.rpartition("@")
        if not name or not t.isdigit():
            raise ValueError(f"bad dump column {col!r}")
        if name not in names:
            names.append(name)
        times.add(int(t))
    n_ch, window = len(names), len(times)
    if n_ch * window != len(header) - 3:
        raise ValueError("dump columns do not form a channels x window grid")
    ids, labels, rows = [], [], []
    for row in reader:
        if not row:
            continue
        ids.append(f"{row[0]}:{row[1]}")
        labels.append(row[2])
        rows.append(np.array(row[3:], dtype=float).reshape(n_ch, window))
    series = np.stack(rows) if rows else np.zeros((0, n_ch, window))
    return Dump(ids, labels, series, names)
