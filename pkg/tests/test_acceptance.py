"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from oracles import finite_difference_grads, max_relative_error, random_params
from microtactics import encoder as enc
from microtactics import pipeline
from microtactics.evaluation import ConfusionMatrix, count_inversions
from microtactics.fuzzy import DEFAULT_X, DEFAULT_Y, KernelBank, TriParams, fuzzify, tri_membership
from microtactics.pipeline import ExperimentSection, config_from_dict
from microtactics.triplet import TripletConfig, _batch_loss_and_grads, sample_triplet, triplet_loss


def report(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


# hand-derived interior values as exact rationals
INTERIOR = [
    (85, (98, 94, 72), Fraction(13, 22)),
    (96, (98, 94, 72), Fraction(1, 2)),
    (60, (94, 72, 47), Fraction(13, 25)),
    (80, (94, 72, 47), Fraction(7, 11)),
    (30, (72, 47, 22), Fraction(8, 25)),
    (10, (47, 22, 0), Fraction(5, 11)),
    (-2, (22, 0, -4), Fraction(1, 2)),
    (5, (-2, 0, 17), Fraction(12, 17)),
    (25, (0, 17, 33), Fraction(1, 2)),
    (40, (17, 33, 50), Fraction(10, 17)),
    (50.5, (33, 50, 51), Fraction(1, 2)),
    (55, (50, 51, 60), Fraction(5, 9)),
]


def test_1_kernel_exactness():
    worst = 0.0
    for tri in (*DEFAULT_X, *DEFAULT_Y):
        a, b, c = tri
        for x, want in ((a, 0.0), (b, 1.0), (c, 0.0)):
            worst = max(worst, abs(tri_membership(x, tri) - want))
    covered = set()
    for x, (a, b, c), want in INTERIOR:
        worst = max(worst, abs(tri_membership(x, TriParams(a, b, c)) - float(want)))
        covered.add((a, b, c))
    ok = worst <= 1e-9 and len(INTERIOR) >= 10 and len(covered) == 10
    report(1, "fuzzy kernel exactness", ok, f"10 triangles x 3 anchors + {len(INTERIOR)} interior points, max |err| = {worst:.2e}")


def test_2_dimensional_contract():
    rng = np.random.default_rng(2)
    micro = np.empty((1000, 22, 25))
    micro[:, 0::2] = rng.uniform(-10, 104, (1000, 11, 25))
    micro[:, 1::2] = rng.uniform(-5, 55, (1000, 11, 25))
    bank = KernelBank()
    fuzzify(micro[:2], bank)  # warm-up
    tic = time.perf_counter()
    out = fuzzify(micro, bank)
    elapsed = time.perf_counter() - tic
    ok = out.shape == (1000, 110, 25) and out.min() >= 0.0 and out.max() <= 1.0 and elapsed < 1.0
    report(2, "dimensional contract", ok, f"shape {out.shape}, range [{out.min():.3f}, {out.max():.3f}], {elapsed * 1000:.1f} ms")


def test_3_causality():
    params = random_params(enc.EncoderConfig(), 3)
    rng = np.random.default_rng(3)
    broken = 0
    for _ in range(100):
        x = rng.uniform(0, 1, (110, 25))
        base = enc.forward_sequence(params, x)
        for t in rng.choice(np.arange(1, 25), size=10, replace=False):
            y = x.copy()
            y[:, t:] += rng.normal(0, 1, y[:, t:].shape)
            out = enc.forward_sequence(params, y)
            if not np.array_equal(out[:, :t], base[:, :t]):
                broken += 1
    report(3, "causality", broken == 0, f"1000 perturbations, {broken} changed an earlier output")


GRAD_CONFIGS = [
    enc.EncoderConfig(in_channels=6, hidden_channels=4, depth=3, kernel_size=3, out_dim=5),
    enc.EncoderConfig(in_channels=5, hidden_channels=5, depth=2, kernel_size=2, out_dim=3, leaky_slope=0.2),
    # no residual path: deeper stacks shrink gradients to FD roundoff level
    enc.EncoderConfig(in_channels=3, hidden_channels=6, depth=3, kernel_size=3, out_dim=4, residual=False, leaky_slope=0.1),
]


def test_4_gradient_correctness():
    errors = []
    for n, cfg in enumerate(GRAD_CONFIGS):
        rng = np.random.default_rng(40 + n)
        params = random_params(cfg, 40 + n)
        lengths = rng.integers(6, 14, size=5)
        dataset = [rng.normal(0, 1, (cfg.in_channels, int(L))) for L in lengths]
        tcfg = TripletConfig(K=3, fixed_length=False)
        triplets = [sample_triplet(list(lengths), tcfg, rng) for _ in range(3)]

        def loss_fn(p):
            total = 0.0
            for tr in triplets:
                r = enc.encode(p, tr.ref.take(dataset))
                q = enc.encode(p, tr.pos.take(dataset))
                negs = np.stack([enc.encode(p, s.take(dataset)) for s in tr.negs])
                total += triplet_loss(r, q, negs)
            return total / len(triplets)

        loss, analytic = _batch_loss_and_grads(params, dataset, triplets)
        assert loss == pytest.approx(loss_fn(params), rel=1e-12)
        numeric = finite_difference_grads(loss_fn, params, h=1e-5)
        errors.append(max_relative_error(analytic, numeric))
    ok = max(errors) < 1e-4
    report(4, "gradient correctness", ok, "max relative error per config " + ", ".join(f"{e:.1e}" for e in errors))


def test_5_loss_identities():
    errs = []
    for K in (1, 5, 10):
        z = np.zeros(8)
        errs.append(abs(triplet_loss(z, z, np.zeros((K, 8))) - (1 + K) * math.log(2)))
    e = np.array([1.0, 0.0])
    worked = triplet_loss(e, e, e[None])
    ok = max(errs) <= 1e-9 and abs(worked - 1.626524) <= 1e-6
    report(5, "loss identities", ok, f"zero-embedding max |err| = {max(errs):.1e}, worked example {worked:.7f}")


def test_6_sampler_fidelity():
    n_series, length, n_draws = 200, 25, 100_000
    lengths = [length] * n_series
    cfg = TripletConfig(K=5)

    def stream(seed):
        rng = np.random.default_rng(seed)
        return [sample_triplet(lengths, cfg, rng) for _ in range(n_draws)]

    triplets = stream(6)
    violations = 0
    for tr in triplets:
        ref, pos = tr.ref, tr.pos
        inside = 0 <= ref.start and ref.stop <= length and 1 <= pos.length <= ref.length
        inside &= pos.series == ref.series and ref.start <= pos.start and pos.stop <= ref.stop
        inside &= len(tr.negs) == cfg.K
        inside &= all(0 <= s.start and s.stop <= length and s.length == pos.length for s in tr.negs)
        violations += not inside
    counts = np.bincount([tr.pos.length for tr in triplets], minlength=length + 1)[1:]
    p_value = stats.chisquare(counts).pvalue
    same = stream(6)[:2000] == triplets[:2000]
    ok = violations == 0 and p_value > 0.01 and same
    report(6, "sampler fidelity", ok, f"{violations} containment violations in {n_draws}, s_pos chi-square p = {p_value:.3f}, seeded streams equal: {same}")


def test_7_evaluation_arithmetic():
    cm = ConfusionMatrix(np.array([[4936, 274, 401], [452, 322, 84], [488, 87, 508]]))
    ok = abs(cm.accuracy - 0.763506) <= 1e-6 and abs(cm.accuracy - 0.7635063559322034) <= 1e-12
    report(7, "evaluation arithmetic", ok, f"accuracy {cm.accuracy:.10f} over {cm.total} items")


def test_8_end_to_end_trend(tmp_path):
    tic = time.perf_counter()
    cfg = config_from_dict({"seed": 0, "out_dir": str(tmp_path / "e2e")})
    cfg = cfg.replace(synth=cfg.synth.__class__(n_events_per_class=30, noise_sigma=1.0))
    tracking, pbp = pipeline.cmd_synth(cfg)
    cfg = cfg.replace(tracking=str(tracking), pbp=str(pbp), experiment=ExperimentSection(setups=("b",)))
    rows = pipeline.cmd_run(cfg)["results"]
    acc = {r["fraction"]: r["accuracy"] for r in rows}
    ordered = [acc[f] for f in sorted(acc, reverse=True)]
    inversions = count_inversions(ordered)
    elapsed = time.perf_counter() - tic
    ok = acc[0.8] >= 0.90 and acc[0.8] - acc[0.05] >= 0.05 and inversions <= 1 and elapsed < 600
    curve = " ".join(f"{f:g}:{a:.3f}" for f, a in sorted(acc.items(), reverse=True))
    report(8, "end-to-end trend", ok, f"setup b {curve}; drop {acc[0.8] - acc[0.05]:.3f}; {inversions} inversions; {elapsed:.0f} s")


def test_9_determinism(tmp_path):
    cfg = config_from_dict(
        {
            "seed": 9,
            "out_dir": str(tmp_path / "det"),
            "encoder": {"hidden_channels": 8, "out_dim": 8},
            "triplet": {"epochs": 2},
            "synth": {"n_events_per_class": 5},
            "experiment": {"fractions": [0.8, 0.25]},
        }
    )
    tracking, pbp = pipeline.cmd_synth(cfg)
    cfg = cfg.replace(tracking=str(tracking), pbp=str(pbp))
    path = tmp_path / "det" / "report.json"
    pipeline.cmd_run(cfg)
    first = path.read_bytes()
    path.unlink()
    pipeline.cmd_run(cfg)
    second = path.read_bytes()
    report(9, "determinism", first == second, f"two runs, report.json {len(first)} bytes, identical: {first == second}")
