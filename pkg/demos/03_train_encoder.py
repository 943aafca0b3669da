"""Unsupervised encoder training: triplets drawn from the micro-events themselves.

Run: python demos/03_train_encoder.py   (a few seconds)
"""
import numpy as np

from microtactics import encoder as enc
from microtactics.court import CourtSpec
from microtactics.evaluation import confusion, knn_classify, make_split
from microtactics.fuzzy import KernelBank, fuzzify
from microtactics.ingest import SynthConfig, align, generate_synthetic
from microtactics.segmentation import WindowConfig, segment, stack
from microtactics.triplet import TripletConfig, sample_triplet, train

spec = CourtSpec()
frames, actions = generate_synthetic(SynthConfig(n_events_per_class=10, seed=2))
micro = segment(align(frames, actions, spec), WindowConfig(), spec)
raw, labels = stack(micro)
x = fuzzify(raw, KernelBank())
print("dataset:", x.shape)

ecfg = enc.EncoderConfig()
print(f"encoder: {ecfg.depth} blocks, receptive field {ecfg.receptive_field} frames")

# what one training example looks like
rng = np.random.default_rng(0)
tr = sample_triplet([x.shape[-1]] * len(x), TripletConfig(), rng)
print("ref", tr.ref, "\npos", tr.pos, "\nfirst negative", tr.negs[0])

result = train(x, ecfg, TripletConfig(epochs=5, seed=0))
print("mean loss per epoch:", " ".join(f"{v:.3f}" for v in result.history))

emb = enc.encode_batched(result.params, x)
split = make_split(len(x), 0.5, seed=0)
preds = knn_classify(emb[split.train_ids], labels[split.train_ids], emb[split.test_ids], k=5)
cm = confusion(preds, labels[split.test_ids])
print(f"kNN on embeddings, half for training: accuracy {cm.accuracy:.3f}")
print(cm.counts)
