"""Command line entry point: ``microtactics {synth,run,embed,report}``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings

from . import pipeline
from .fuzzy import KernelBank


def _base_config(args) -> pipeline.PipelineConfig:
    cfg = pipeline.load_config(args.config) if args.config else pipeline.PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    return cfg.replace(**changes)


def _override(section, **values):
    values = {k: v for k, v in values.items() if v is not None}
    return dataclasses.replace(section, **values) if values else section


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microtactics", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON pipeline config")
    common.add_argument("--seed", type=int, help="global seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a seeded synthetic tracking + play-by-play pair")
    p.add_argument("--n-events-per-class", type=int)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--duration", type=float, nargs=2, metavar=("MIN", "MAX"))

    p = sub.add_parser("run", parents=[common], help="run the whole pipeline and write a report bundle")
    p.add_argument("--tracking")
    p.add_argument("--pbp")
    p.add_argument("--kernel", help="CSV axis,region,a,b,c overriding the triangle table")
    p.add_argument("--setups", nargs="+", choices=["a", "b"])
    p.add_argument("--fractions", type=float, nargs="+")
    p.add_argument("--split", choices=["micro", "event"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--classifier", choices=["knn", "svm"])
    p.add_argument("-k", type=int, dest="knn_k")

    p = sub.add_parser("embed", parents=[common], help="embed a micro-event dump with a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("dump")
    p.add_argument("--fuzzify", action="store_true", help="apply the presence kernel to a raw 22-channel dump")
    p.add_argument("--kernel")

    p = sub.add_parser("report", parents=[common], help="print a report bundle and rewrite its CSV tables")
    p.add_argument("path", nargs="?", help="report.json or its directory (default: --out / config out_dir)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _base_config(args)
        if args.command == "synth":
            synth = _override(
                cfg.synth,
                n_events_per_class=args.n_events_per_class,
                noise_sigma=args.noise_sigma,
                event_duration_range=tuple(args.duration) if args.duration else None,
            )
            cfg = cfg.replace(synth=synth)
            try:
                pipeline.synth_config(cfg)
            except ValueError as exc:
                parser.error(f"synth: {exc}")
            for path in pipeline.cmd_synth(cfg):
                print(path)
        elif args.command == "run":
            cfg = cfg.replace(
                tracking=args.tracking or cfg.tracking,
                pbp=args.pbp or cfg.pbp,
                kernel_path=args.kernel or cfg.kernel_path,
                experiment=_override(cfg.experiment, setups=args.setups, fractions=args.fractions, split=args.split),
                triplet=_override(cfg.triplet, epochs=args.epochs),
                classifier=_override(cfg.classifier, name=args.classifier, k=args.knn_k),
            )
            report = pipeline.cmd_run(cfg)
            print(pipeline.format_report(report))
        elif args.command == "embed":
            kernel = None
            if args.kernel:
                with open(args.kernel, encoding="utf-8") as fh:
                    kernel = KernelBank.from_csv(fh)
            out = args.out or "embeddings.csv"
            if not out.endswith(".csv"):
                out = f"{out.rstrip('/')}/embeddings.csv"
            n = pipeline.cmd_embed(args.checkpoint, args.dump, out, args.fuzzify, kernel)
            print(f"{n} embeddings -> {out}")
        elif args.command == "report":
            report = pipeline.cmd_report(args.path or cfg.out_dir)
            print(pipeline.format_report(report))
    except pipeline.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: [config] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    warnings.simplefilter("default")
    sys.exit(main())
