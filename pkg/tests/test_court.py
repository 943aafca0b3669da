import dataclasses
import io
import math

import numpy as np
import pytest

from microtactics.court import (
    CHANNEL_NAMES,
    ActionLabel,
    CourtSpec,
    Frame,
    MicroEvent,
    RawTag,
    channel_index,
    validate_frame,
)
from microtactics.segmentation import read_dump, write_micro_events

from conftest import make_frame


def test_court_defaults():
    spec = CourtSpec()
    assert (spec.length_x, spec.width_y, spec.frame_rate) == (94, 50, 25)
    assert spec.frames_for(1.0) == 25
    assert spec.frames_for(0.2) == 5


@pytest.mark.parametrize("field", ["length_x", "width_y", "frame_rate"])
def test_court_rejects_nonpositive(field):
    with pytest.raises(ValueError):
        CourtSpec(**{field: 0})


def test_valid_frame_has_no_violations():
    assert validate_frame(make_frame()) == []


def test_four_home_players_reported():
    assert validate_frame(make_frame(n_home=4)) == ["home count 4 != 5"]


def test_nan_coordinate_reported():
    problems = validate_frame(make_frame(ball=(math.nan, 25.0)))
    assert problems == ["non-finite coordinate"]


def test_validate_does_not_mutate():
    f = make_frame(n_away=6)
    before = dataclasses.astuple(f)
    validate_frame(f)
    assert dataclasses.astuple(f) == before


def test_out_of_bounds_coordinates_allowed():
    assert validate_frame(make_frame(ball=(-30.0, 400.0))) == []


def test_channel_order():
    assert CHANNEL_NAMES[:4] == ("ball.x", "ball.y", "home1.x", "home1.y")
    assert CHANNEL_NAMES[-1] == "away5.y"
    assert len(CHANNEL_NAMES) == 22
    for i, name in enumerate(CHANNEL_NAMES):
        entity, axis = name.split(".")
        team = "ball" if entity == "ball" else entity[:4]
        slot = 0 if entity == "ball" else int(entity[4:])
        assert channel_index(team, slot, axis) == i


def test_frame_coords_roundtrip():
    f = make_frame(t=1.5)
    g = Frame.from_coords(1.5, f.coords())
    assert g == f


def test_label_mapping_total_and_three_classes():
    mapped = {tag: tag.label for tag in RawTag}
    assert len(mapped) == 6
    assert set(mapped.values()) == set(ActionLabel)
    assert RawTag.MAKE.label is RawTag.MISS.label is ActionLabel.SHOT
    assert {RawTag.OUT_OF_BOUND.label, RawTag.TURNOVER.label, RawTag.STEAL.label} == {ActionLabel.LOST_BALL}
    assert RawTag.FOUL.label is ActionLabel.FOUL


def test_raw_tag_parse_case_insensitive():
    assert RawTag.parse("miss") is RawTag.MISS
    assert RawTag.parse("Oob") is RawTag.OUT_OF_BOUND
    with pytest.raises(ValueError, match="unknown action tag"):
        RawTag.parse("DUNKK")


def test_micro_event_immutable_and_channel_order_survives_dump(rng):
    series = rng.normal(size=(22, 25))
    m = MicroEvent(series, RawTag.STEAL, 3, 10)
    with pytest.raises(ValueError):
        m.series[0, 0] = 1.0
    buf = io.StringIO()
    write_micro_events(buf, [m])
    buf.seek(0)
    dump = read_dump(buf)
    assert dump.channel_names == list(CHANNEL_NAMES)
    assert dump.ids == ["3:10"]
    assert np.array_equal(dump.series[0], series)
