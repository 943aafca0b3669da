"""End-to-end orchestration: config, derived seeds, stage functions and report files.

Config files are JSON; every key is optional and defaults to the values below::

    {
      "tracking": "data/tracking.jsonl",      # run: tracking input
      "pbp": "data/pbp.csv",                  # run: play-by-play input
      "out_dir": "out",
      "seed": 0,
      "court":   {"length_x": 94, "width_y": 50, "frame_rate": 25},
      "window":  {"window_seconds": 1.0, "stride_seconds": 0.2, "min_event_seconds": 1.0},
      "kernel_path": null,                    # CSV axis,region,a,b,c overriding the default triangles
      "flip_x": false,                        # mirror x about mid-court for every event
      "encoder": {"hidden_channels": 40, "depth": 4, "kernel_size": 3, "out_dim": 64,
                  "leaky_slope": 0.01, "residual": true},
      "triplet": {"K": 5, "fixed_length": true, "epochs": 10, "batch_size": 16,
                  "lr": 0.001, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
      "classifier": {"name": "knn", "k": 5, "svm_epochs": 50, "svm_lr": 0.01, "svm_reg": 0.001},
      "experiment": {"setups": ["a", "b"], "fractions": [0.8, 0.65, 0.4, 0.25, 0.1, 0.05],
                     "split": "micro"},       # or "event" for leakage-free splits
      "synth": {"n_events_per_class": 30, "event_duration_range": [2.0, 4.0], "noise_sigma": 1.0},
      "dump_micro_events": true
    }

Sub-seeds are derived from the global seed and a stage name (see
:func:`derive_seed`), so adding a stage never shifts another stage's stream.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
import zlib
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import encoder as enc
from .court import CourtSpec, Event
from .evaluation import SETUPS, ConfusionMatrix, knn_classify, run_experiment_grid, svm_classify
from .fuzzy import KernelBank, fuzzify, fuzzy_channel_names
from .ingest import SynthConfig, align, generate_synthetic, parse_pbp, parse_tracking, write_pbp, write_tracking
from .segmentation import WindowConfig, census, read_dump, segment, stack, write_micro_events
from .triplet import TripletConfig, train, write_training_log

REPORT_VERSION = 1
DEFAULT_FRACTIONS = (0.8, 0.65, 0.4, 0.25, 0.1, 0.05)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class EncoderSection:
    hidden_channels: int = 40
    depth: int = 4
    kernel_size: int = 3
    out_dim: int = 64
    leaky_slope: float = 0.01
    residual: bool = True

    def build(self, in_channels: int) -> enc.EncoderConfig:
        return enc.EncoderConfig(in_channels=in_channels, **asdict(self))


@dataclass(frozen=True)
class TripletSection:
    K: int = 5
    fixed_length: bool = True
    epochs: int = 10
    batch_size: int = 16
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def build(self, seed: int) -> TripletConfig:
        return TripletConfig(seed=seed, **asdict(self))


@dataclass(frozen=True)
class ClassifierSection:
    name: str = "knn"
    k: int = 5
    svm_epochs: int = 50
    svm_lr: float = 0.01
    svm_reg: float = 1e-3

    def __post_init__(self):
        if self.name not in ("knn", "svm"):
            raise ValueError(f"classifier must be 'knn' or 'svm', got {self.name!r}")


@dataclass(frozen=True)
class ExperimentSection:
    setups: tuple[str, ...] = SETUPS
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    split: str = "micro"

    def __post_init__(self):
        object.__setattr__(self, "setups", tuple(self.setups))
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        bad = [s for s in self.setups if s not in SETUPS]
        if bad or not self.setups:
            raise ValueError(f"setups must be a non-empty subset of {SETUPS}, got {self.setups}")
        if not self.fractions or not all(0 < f < 1 for f in self.fractions):
            raise ValueError(f"fractions must lie in (0, 1), got {self.fractions}")
        if self.split not in ("micro", "event"):
            raise ValueError("split must be 'micro' or 'event'")


@dataclass(frozen=True)
class SynthSection:
    n_events_per_class: int = 30
    event_duration_range: tuple[float, float] = (2.0, 4.0)
    noise_sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "event_duration_range", tuple(float(v) for v in self.event_duration_range))


@dataclass(frozen=True)
class PipelineConfig:
    tracking: str | None = None
    pbp: str | None = None
    out_dir: str = "out"
    seed: int = 0
    court: CourtSpec = field(default_factory=CourtSpec)
    window: WindowConfig = field(default_factory=WindowConfig)
    kernel_path: str | None = None
    flip_x: bool = False
    encoder: EncoderSection = field(default_factory=EncoderSection)
    triplet: TripletSection = field(default_factory=TripletSection)
    classifier: ClassifierSection = field(default_factory=ClassifierSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    synth: SynthSection = field(default_factory=SynthSection)
    dump_micro_events: bool = True

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def _build(cls, data):
    if not dataclasses.is_dataclass(cls):
        return data
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise ValueError(f"expected an object for {cls.__name__}, got {data!r}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        sub = f.default_factory() if f.default_factory is not dataclasses.MISSING else None
        kwargs[name] = _build(type(sub), value) if dataclasses.is_dataclass(sub) else value
    return cls(**kwargs)


def config_from_dict(data: dict) -> PipelineConfig:
    return _build(PipelineConfig, data)


def load_config(path: str | os.PathLike) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def derive_seed(seed: int, stage: str) -> int:
    """Deterministic 32-bit sub-seed for a named stage."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(stage.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


# -- file helpers -----------------------------------------------------------


@contextmanager
def atomic_write(path: str | os.PathLike, mode: str = "w"):
    """Write to a temporary file next to ``path`` and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        kwargs = {"encoding": "utf-8", "newline": ""} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, f"{type(exc).__name__}: {exc}") from exc


# -- stages -----------------------------------------------------------------


def synth_config(cfg: PipelineConfig) -> SynthConfig:
    s = cfg.synth
    return SynthConfig(
        n_events_per_class=s.n_events_per_class,
        event_duration_range=s.event_duration_range,
        noise_sigma=s.noise_sigma,
        seed=derive_seed(cfg.seed, "synth"),
        spec=cfg.court,
    )


def cmd_synth(cfg: PipelineConfig) -> tuple[Path, Path]:
    """Write a synthetic tracking file and play-by-play file into ``cfg.out_dir``."""
    with stage("synth"):
        frames, actions = generate_synthetic(synth_config(cfg))
    out = Path(cfg.out_dir)
    tracking, pbp = out / "tracking.jsonl", out / "pbp.csv"
    with stage("write"):
        with atomic_write(tracking) as fh:
            write_tracking(frames, fh)
        with atomic_write(pbp) as fh:
            write_pbp(actions, fh)
    return tracking, pbp


def load_kernel(cfg: PipelineConfig) -> KernelBank:
    if cfg.kernel_path is None:
        return KernelBank()
    with open(cfg.kernel_path, encoding="utf-8") as fh:
        return KernelBank.from_csv(fh)


def load_events(cfg: PipelineConfig) -> list[Event]:
    with stage("parse"):
        with open(cfg.tracking, encoding="utf-8") as fh:
            segments = parse_tracking(fh, cfg.court)
        with open(cfg.pbp, encoding="utf-8", newline="") as fh:
            actions = parse_pbp(fh)
    with stage("align"):
        events = align(segments, actions, cfg.court)
        if cfg.flip_x:
            events = [dataclasses.replace(e, flip=True) for e in events]
    return events


def prepare(cfg: PipelineConfig):
    """Parse, align, window and fuzzify; returns (micro_events, features, labels, event ids)."""
    events = load_events(cfg)
    with stage("window"):
        micro = segment(events, cfg.window, cfg.court)
        if not micro:
            raise ValueError("no micro-events survived the duration filter")
        raw, labels = stack(micro)
    with stage("fuzzify"):
        features = fuzzify(raw, load_kernel(cfg))
    groups = np.array([m.source_event_id for m in micro])
    return micro, features, labels, groups


def _classifier(cfg: PipelineConfig, seed: int):
    c = cfg.classifier
    if c.name == "knn":
        return lambda tr, ytr, te: knn_classify(tr, ytr, te, k=c.k)
    return lambda tr, ytr, te: svm_classify(tr, ytr, te, c.svm_epochs, c.svm_lr, c.svm_reg, seed)


def _check_inputs(cfg: PipelineConfig) -> None:
    for name in ("tracking", "pbp", "kernel_path"):
        path = getattr(cfg, name)
        if path is None and name != "kernel_path":
            raise StageError("config", f"no {name} file given")
        if path is not None and not os.path.isfile(path):
            raise StageError("config", f"{name} file not found: {path}")


def cmd_run(cfg: PipelineConfig) -> dict:
    """Run every stage and write the report bundle into ``cfg.out_dir``; returns the report."""
    _check_inputs(cfg)
    out = Path(cfg.out_dir)
    micro, features, labels, groups = prepare(cfg)
    window = features.shape[-1]
    enc_cfg = cfg.encoder.build(features.shape[1])
    enc_cfg.check_window(window)

    if cfg.dump_micro_events:
        with stage("write"), atomic_write(out / "microevents.csv") as fh:
            write_micro_events(fh, micro)

    training: dict[str, dict] = {}
    seeds = {"synth": derive_seed(cfg.seed, "synth")}

    def fit_and_embed(train_ids, tag):
        seed = derive_seed(cfg.seed, f"encoder/{tag}")
        seeds[f"encoder/{tag}"] = seed
        with stage(f"train {tag}"):
            result = train(features[train_ids], enc_cfg, cfg.triplet.build(seed))
        with stage("write"):
            with atomic_write(out / f"training_log_{tag}.csv") as fh:
                write_training_log(result, fh)
            with atomic_write(out / f"checkpoint_{tag}.npz", "wb") as fh:
                enc.save_checkpoint(result.params, fh)
        training[tag] = {"n_train": int(len(train_ids)), "loss_history": result.history}
        with stage(f"embed {tag}"):
            return enc.encode_batched(result.params, features)

    rows = []
    for setup in cfg.experiment.setups:
        grid_seed = derive_seed(cfg.seed, f"split/{setup}")
        seeds[f"split/{setup}"] = grid_seed
        with stage(f"classify {setup}"):
            grid = run_experiment_grid(
                len(labels),
                labels,
                setup,
                cfg.experiment.fractions,
                grid_seed,
                fit_and_embed,
                _classifier(cfg, derive_seed(cfg.seed, f"classifier/{setup}")),
                groups if cfg.experiment.split == "event" else None,
            )
        for row in grid.rows:
            rows.append(
                {
                    "setup": row.setup,
                    "fraction": row.fraction,
                    "accuracy": row.accuracy,
                    "confusion": row.matrix.as_lists(),
                    "encoder": row.encoder_tag,
                }
            )

    report = {
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "seeds": dict(sorted(seeds.items())),
        "n_events": int(len(np.unique(groups))),
        "n_micro_events": int(len(labels)),
        "window_frames": int(window),
        "census": census(micro),
        "results": rows,
        "training": dict(sorted(training.items())),
    }
    write_report(report, out)
    return report


def write_report(report: dict, out: Path) -> None:
    """report.json, accuracy.csv and one confusion_<setup>_<pct>.csv per result row."""
    out = Path(out)
    with stage("write"):
        with atomic_write(out / "report.json") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with atomic_write(out / "accuracy.csv") as fh:
            fh.write("fraction,setup,accuracy\n")
            for row in report["results"]:
                fh.write(f"{row['fraction']!r},{row['setup']},{row['accuracy']!r}\n")
        for row in report["results"]:
            pct = int(round(row["fraction"] * 100))
            with atomic_write(out / f"confusion_{row['setup']}_{pct}.csv") as fh:
                ConfusionMatrix(np.array(row["confusion"])).to_csv(fh)


def format_report(report: dict) -> str:
    lines = [f"{report['n_micro_events']} micro-events from {report['n_events']} events"]
    lines.append("setup  fraction  accuracy")
    for row in report["results"]:
        lines.append(f"{row['setup']:>5}  {row['fraction']:8.2f}  {row['accuracy']:8.4f}")
    return "\n".join(lines)


def cmd_report(path: str | os.PathLike) -> dict:
    """Reload a report bundle (file or output directory) and rewrite its CSV tables."""
    path = Path(path)
    report_path = path / "report.json" if path.is_dir() else path
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    write_report(report, report_path.parent)
    return report


def cmd_embed(checkpoint: str | os.PathLike, dump_path: str | os.PathLike, out_path: str | os.PathLike,
              fuzzify_first: bool = False, kernel: KernelBank | None = None) -> int:
    """Embed every micro-event of a dump CSV; writes ``id,label,e0..`` rows and returns the row count."""
    with stage("load"):
        params = enc.load_checkpoint(checkpoint)
        with open(dump_path, encoding="utf-8", newline="") as fh:
            dump = read_dump(fh)
    series = dump.series
    n_ch = series.shape[1]
    with stage("embed"):
        if fuzzify_first:
            series = fuzzify(series, kernel)
            n_ch = series.shape[1]
        if n_ch != params.cfg.in_channels:
            hint = " (fuzzify first)" if n_ch * 5 == params.cfg.in_channels else ""
            raise ValueError(f"checkpoint expects {params.cfg.in_channels} channels, dump has {n_ch}{hint}")
        emb = enc.encode_batched(params, series)
    with stage("write"), atomic_write(out_path) as fh:
        fh.write("id,label," + ",".join(f"e{i}" for i in range(emb.shape[1])) + "\n")
        for mid, lab, row in zip(dump.ids, dump.labels, emb):
            fh.write(f"{mid},{lab}," + ",".join(repr(float(v)) for v in row) + "\n")
    return len(emb)


__all__ = [
    "PipelineConfig",
    "StageError",
    "cmd_embed",
    "cmd_report",
    "cmd_run",
    "cmd_synth",
    "config_from_dict",
    "derive_seed",
    "fuzzy_channel_names",
    "load_config",
    "prepare",
]
