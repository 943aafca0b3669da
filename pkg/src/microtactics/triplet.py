"""Unsupervised encoder training with subseries triplets and negative sampling."""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import encoder as enc


@dataclass(frozen=True)
class TripletConfig:
    """Sampling and optimisation settings.

    With ``fixed_length`` on, negatives take the positive's length (all series
    share one length in the pipeline, so they can be batched); with it off,
    each negative length is drawn uniformly from its own source series.
    """

    K: int = 5
    fixed_length: bool = True
    epochs: int = 10
    batch_size: int = 16
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_rejections: int = 1000

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


class Span(NamedTuple):
    series: int
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    def take(self, dataset) -> np.ndarray:
        return np.asarray(dataset[self.series])[:, self.start : self.stop]


class Triplet(NamedTuple):
    ref: Span
    pos: Span
    negs: tuple[Span, ...]


def series_lengths(dataset) -> list[int]:
    return [int(np.shape(s)[-1]) for s in dataset]


def sample_triplet(lengths: Sequence[int], cfg: TripletConfig, rng: np.random.Generator, i: int | None = None) -> Triplet:
    """Draw one (ref, pos, negatives) triple anchored on series ``i``.

    ``lengths`` holds the length of every series in the dataset. When ``i`` is
    None the anchor series is itself drawn uniformly.
    """
    n = len(lengths)
    if i is None:
        i = int(rng.integers(n))
    s_i = int(lengths[i])
    s_pos = int(rng.integers(1, s_i + 1))
    s_ref = int(rng.integers(s_pos, s_i + 1))
    ref_start = int(rng.integers(0, s_i - s_ref + 1))
    pos_start = ref_start + int(rng.integers(0, s_ref - s_pos + 1))

    negs = []
    rejections = 0
    while len(negs) < cfg.K:
        j = int(rng.integers(n))
        s_j = int(lengths[j])
        if cfg.fixed_length:
            if s_j < s_pos:
                rejections += 1
                if rejections > cfg.max_rejections:
                    raise RuntimeError(
                        f"no series of length >= {s_pos} found for negatives after {cfg.max_rejections} draws"
                    )
                continue
            s_neg = s_pos
        else:
            s_neg = int(rng.integers(1, s_j + 1))
        negs.append(Span(j, int(rng.integers(0, s_j - s_neg + 1)), s_neg))
    return Triplet(Span(i, ref_start, s_ref), Span(i, pos_start, s_pos), tuple(negs))


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def triplet_loss_and_grad(e_ref, e_pos, e_negs):
    """Loss ``softplus(-r.p) + sum_k softplus(r.n_k)`` and its gradients (ref, pos, negs)."""
    r = np.asarray(e_ref, dtype=float)
    p = np.asarray(e_pos, dtype=float)
    negs = np.atleast_2d(np.asarray(e_negs, dtype=float))
    if r.shape != p.shape or negs.shape[1:] != r.shape:
        raise ValueError(f"embedding dimensions differ: {r.shape}, {p.shape}, {negs.shape}")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(p)) and np.all(np.isfinite(negs))):
        raise ValueError("non-finite embedding")
    zp = float(r @ p)
    zn = negs @ r
    loss = float(_softplus(-zp) + np.sum(_softplus(zn)))
    wp = _sigmoid(-zp)  # -d/dz softplus(-z)
    wn = _sigmoid(zn)
    d_ref = -wp * p + wn @ negs
    d_pos = -wp * r
    d_negs = wn[:, None] * r[None, :]
    return loss, d_ref, d_pos, d_negs


def triplet_loss(e_ref, e_pos, e_negs) -> float:
    return triplet_loss_and_grad(e_ref, e_pos, e_negs)[0]


@dataclass
class TrainResult:
    params: enc.EncoderParams
    history: list[float] = field(default_factory=list)
    wall_seconds: list[float] = field(default_factory=list)


def _batch_loss_and_grads(params, dataset, triplets):
    """Mean loss over ``triplets`` and the matching parameter gradients."""
    # group every subseries by length so each group runs as one batched pass
    groups: dict[int, list[Span]] = defaultdict(list)
    slots = []
    for tr in triplets:
        spans = (tr.ref, tr.pos, *tr.negs)
        slot = []
        for span in spans:
            g = groups[span.length]
            slot.append((span.length, len(g)))
            g.append(span)
        slots.append(slot)

    emb, caches = {}, {}
    for length, spans in groups.items():
        x = np.stack([s.take(dataset) for s in spans])
        emb[length], caches[length] = enc.encode_with_cache(params, x)
    demb = {length: np.zeros_like(e) for length, e in emb.items()}

    total = 0.0
    scale = 1.0 / len(triplets)
    for slot in slots:
        vecs = [emb[L][j] for L, j in slot]
        loss, d_ref, d_pos, d_negs = triplet_loss_and_grad(vecs[0], vecs[1], np.stack(vecs[2:]))
        total += loss
        for (L, j), d in zip(slot, (d_ref, d_pos, *d_negs)):
            demb[L][j] += scale * d

    grads = None
    for length in groups:
        g = enc.backward(params, caches[length], demb[length])
        grads = g if grads is None else {k: grads[k] + g[k] for k in grads}
    return total * scale, grads


def train(
    dataset,
    encoder_cfg: enc.EncoderConfig,
    cfg: TripletConfig,
    params: enc.EncoderParams | None = None,
) -> TrainResult:
    """Train an encoder on ``dataset`` (a sequence of (channels, T) series) without labels.

    Each epoch visits every series once in a shuffled order, draws one triplet
    anchored on it, averages the loss over mini-batches of ``batch_size``
    triplets and takes one Adam step per mini-batch. ``history`` holds the
    mean triplet loss per epoch.
    """
    init_seed, sample_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    if params is None:
        params = enc.init_params(encoder_cfg, init_seed)
    rng = np.random.default_rng(sample_seed)
    lengths = series_lengths(dataset)
    channels = {int(np.shape(s)[0]) for s in dataset}
    if channels and channels != {encoder_cfg.in_channels}:
        raise ValueError(f"series have {sorted(channels)} channels, encoder expects {encoder_cfg.in_channels}")
    if cfg.fixed_length and len(set(lengths)) > 1:
        raise ValueError("fixed_length sampling needs every series to have the same length")

    result = TrainResult(params)
    state = enc.AdamState()
    n = len(lengths)
    for epoch in range(cfg.epochs):
        tic = time.perf_counter()
        order = rng.permutation(n)
        losses = []
        for b0 in range(0, n, cfg.batch_size):
            chunk = order[b0 : b0 + cfg.batch_size]
            triplets = [sample_triplet(lengths, cfg, rng, int(i)) for i in chunk]
            loss, grads = _batch_loss_and_grads(params, dataset, triplets)
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch + 1}, batch {b0 // cfg.batch_size}")
            params, state = enc.adam_step(params, grads, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
            losses.extend([loss] * len(chunk))
        result.history.append(float(np.mean(losses)) if losses else float("nan"))
        result.wall_seconds.append(time.perf_counter() - tic)
    result.params = params
    return result


def write_training_log(result: TrainResult, fh) -> None:
    fh.write("epoch,mean_loss,wall_seconds\n")
    for epoch, (loss, wall) in enumerate(zip(result.history, result.wall_seconds), start=1):
        fh.write(f"{epoch},{loss!r},{wall:.6f}\n")
