"""From a tracking feed plus an action log to labelled one-second micro-events.

Run: python demos/02_events_and_windows.py
"""
import io

from microtactics.court import CourtSpec
from microtactics.ingest import SynthConfig, align, ball_direction_rule, generate_synthetic, parse_pbp, parse_tracking, write_pbp, write_tracking
from microtactics.segmentation import WindowConfig, census, segment, window_count

spec = CourtSpec()
frames, actions = generate_synthetic(SynthConfig(n_events_per_class=5, seed=1))

# round-trip through the on-disk formats, like the CLI does
buf_t, buf_p = io.StringIO(), io.StringIO()
write_tracking(frames, buf_t)
write_pbp(actions, buf_p)
segments = parse_tracking(io.StringIO(buf_t.getvalue()), spec)
actions = parse_pbp(io.StringIO(buf_p.getvalue()))
events = align(segments, actions, spec)
print(f"{len(frames)} frames, {len(actions)} actions -> {len(events)} events")

ev = events[0]
print(f"event {ev.event_id}: {len(ev)} frames ({ev.start_t:.2f}s..{ev.end_t:.2f}s), tag {ev.raw_tag.value} -> {ev.label.name}")

wcfg = WindowConfig()
W, S, _ = wcfg.frames(spec)
print(f"window {W} frames, stride {S}: this event yields {window_count(len(ev), W, S)} micro-events")

micro = segment(events, wcfg, spec)
print("census:", census(micro)["label"])

# a hand rule on ball displacement, for comparison with learned features
hits = sum(ball_direction_rule(e) == e.label for e in events)
print(f"ball-direction rule labels {hits}/{len(events)} events correctly")
