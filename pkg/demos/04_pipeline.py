"""The full pipeline from Python: synthesize, run both setups, read the report.

Run: python demos/04_pipeline.py [out_dir]   (about 30 s)
The same steps from a shell:
    microtactics synth --out out
    microtactics run --tracking out/tracking.jsonl --pbp out/pbp.csv --out out
    microtactics report out
"""
import sys

from microtactics import pipeline

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out"
cfg = pipeline.config_from_dict({"seed": 0, "out_dir": out, "triplet": {"epochs": 5}})
tracking, pbp = pipeline.cmd_synth(cfg)
cfg = cfg.replace(tracking=str(tracking), pbp=str(pbp))

report = pipeline.cmd_run(cfg)
print(pipeline.format_report(report))
print(f"\n{report['n_events']} events, {report['n_micro_events']} micro-events; bundle written to {out}/")
