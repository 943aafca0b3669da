import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from microtactics.court import ActionLabel, Event, Frame, RawTag
from microtactics.ingest import SynthConfig, align, generate_synthetic
from microtactics.segmentation import (
    WindowConfig,
    census,
    filter_events,
    read_dump,
    segment,
    slide_windows,
    stack,
    window_count,
    write_micro_events,
)


def make_event(n, tag=RawTag.FOUL, event_id=0, seed=0):
    rng = np.random.default_rng(seed)
    frames = tuple(Frame.from_coords((k + 1) / 25, rng.uniform(0, 94, 22)) for k in range(n))
    return Event(event_id, frames, 0.0, n / 25, tag)


CFG = WindowConfig()


@pytest.mark.parametrize("n, kept", [(20, False), (24, False), (25, True), (50, True)])
def test_filter_events(n, kept):
    assert (len(filter_events([make_event(n)], CFG)) == 1) is kept


def test_filter_preserves_order():
    events = [make_event(n, event_id=i) for i, n in enumerate([30, 10, 40, 25])]
    assert [e.event_id for e in filter_events(events, CFG)] == [0, 2, 3]


def test_fifty_frames_six_windows():
    micro = slide_windows(make_event(50), CFG)
    assert [m.offset_frames for m in micro] == [0, 5, 10, 15, 20, 25]
    assert all(m.window == 25 and m.label is ActionLabel.FOUL for m in micro)


def test_exact_window_gives_one():
    micro = slide_windows(make_event(25), CFG)
    assert [m.offset_frames for m in micro] == [0]


def test_neighbouring_windows_share_twenty_frames():
    micro = slide_windows(make_event(60), CFG)
    for a, b in zip(micro, micro[1:]):
        np.testing.assert_array_equal(a.series[:, 5:], b.series[:, :20])


def test_windows_are_contiguous_slices():
    ev = make_event(73, seed=4)
    full = ev.series()
    for m in slide_windows(ev, CFG):
        np.testing.assert_array_equal(m.series, full[:, m.offset_frames : m.offset_frames + 25])


@given(st.integers(1, 400), st.integers(1, 60), st.integers(1, 60))
def test_window_count_formula(length, window, stride):
    expected = sum(1 for off in range(0, length) if off % stride == 0 and off + window <= length)
    assert window_count(length, window, stride) == expected


def test_census_empty():
    c = census([])
    assert c["label"] == {"SHOT": 0, "FOUL": 0, "LOST_BALL": 0}
    assert set(c["raw_tag"].values()) == {0}


def test_census_fouls():
    micro = slide_windows(make_event(50, RawTag.FOUL), CFG)
    assert census(micro)["label"] == {"SHOT": 0, "FOUL": 6, "LOST_BALL": 0}


def test_census_synthetic_sixty_per_class():
    frames, actions = generate_synthetic(SynthConfig(n_events_per_class=10, event_duration_range=(2.0, 2.0), seed=7))
    micro = segment(align(frames, actions), CFG)
    assert census(micro)["label"] == {"SHOT": 60, "FOUL": 60, "LOST_BALL": 60}
    tags = census(micro)["raw_tag"]
    assert tags["MAKE"] + tags["MISS"] == 60 and tags["FOUL"] == 60


def test_stack_requires_equal_width():
    a = slide_windows(make_event(25), CFG)
    b = slide_windows(make_event(50), WindowConfig(0.4, 0.4, 1.0))
    with pytest.raises(ValueError, match="mixed"):
        stack(a + b)


def test_window_config_invariants():
    with pytest.raises(ValueError):
        WindowConfig(window_seconds=1.0, stride_seconds=1.5)
    with pytest.raises(ValueError):
        WindowConfig(window_seconds=2.0, min_event_seconds=1.0)
    with pytest.raises(ValueError):
        WindowConfig(stride_seconds=0.0)


def test_dump_roundtrip():
    micro = slide_windows(make_event(35, RawTag.MISS, event_id=4), CFG)
    buf = io.StringIO()
    write_micro_events(buf, micro)
    header = buf.getvalue().splitlines()[0].split(",")
    assert header[:4] == ["event_id", "offset", "label", "ball.x@0"]
    assert len(header) == 3 + 22 * 25
    buf.seek(0)
    dump = read_dump(buf)
    assert dump.ids == ["4:0", "4:5", "4:10"]
    assert dump.labels == ["MISS"] * 3
    np.testing.assert_array_equal(dump.series, stack(micro)[0])
