"""Classification of embeddings and the two train-fraction experiment setups."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .court import ActionLabel

N_CLASSES = len(ActionLabel)
SETUPS = ("a", "b")


@dataclass(frozen=True)
class Split:
    train_ids: np.ndarray
    test_ids: np.ndarray
    fraction: float
    seed: int


def make_split(n: int, fraction: float, seed: int, groups: Sequence | None = None) -> Split:
    """Random train/test partition with ``round(fraction * n)`` training items.

    If ``groups`` is given (e.g. source event ids), whole groups are assigned
    to one side so windows of one event never straddle the split; the training
    side then holds ``round(fraction * n_groups)`` groups.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    if groups is None:
        n_train = int(round(fraction * n))
        if n_train == 0 or n_train == n:
            raise ValueError(f"fraction {fraction} of {n} items leaves an empty train or test set")
        perm = rng.permutation(n)
        train, test = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    else:
        groups = np.asarray(groups)
        uniq = np.unique(groups)
        n_train = int(round(fraction * len(uniq)))
        if n_train == 0 or n_train == len(uniq):
            raise ValueError(f"fraction {fraction} of {len(uniq)} groups leaves an empty train or test set")
        chosen = rng.permutation(uniq)[:n_train]
        mask = np.isin(groups, chosen)
        train, test = np.nonzero(mask)[0], np.nonzero(~mask)[0]
    return Split(train, test, fraction, seed)


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
    return np.sqrt(np.maximum(sq, 0.0))


def knn_classify(train_emb, train_labels, test_emb, k: int = 5) -> np.ndarray:
    """Majority vote among the k Euclidean-nearest training points.

    Vote ties go to the class with the smaller summed neighbour distance, then
    to the earlier class. Equidistant neighbours are taken in training order.
    """
    train_emb = np.asarray(train_emb, dtype=float)
    test_emb = np.asarray(test_emb, dtype=float)
    train_labels = np.asarray(train_labels, dtype=int)
    if train_emb.shape[1] != test_emb.shape[1]:
        raise ValueError(f"dimension mismatch: {train_emb.shape[1]} vs {test_emb.shape[1]}")
    if not 1 <= k <= len(train_emb):
        raise ValueError(f"k={k} must be between 1 and the training size {len(train_emb)}")
    dist = _pairwise_distances(test_emb, train_emb)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    near_d = np.take_along_axis(dist, nearest, axis=1)
    near_y = train_labels[nearest]
    preds = np.empty(len(test_emb), dtype=int)
    for row in range(len(test_emb)):
        votes = np.bincount(near_y[row], minlength=N_CLASSES)
        sums = np.bincount(near_y[row], weights=near_d[row], minlength=N_CLASSES)
        # lexicographic: most votes, then smallest distance sum, then class order
        preds[row] = min(range(len(votes)), key=lambda c: (-votes[c], sums[c], c))
    return preds


@dataclass
class LinearSVM:
    """One-vs-rest linear SVMs (weights include a bias column)."""

    weights: np.ndarray
    mean: np.ndarray
    scale: np.ndarray

    def scores(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=float) - self.mean) / self.scale
        z = np.hstack([z, np.ones((len(z), 1))])
        return z @ self.weights.T

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.scores(x), axis=1)


def fit_svm(train_emb, train_labels, epochs: int = 50, lr: float = 0.01, reg: float = 1e-3, seed: int = 0) -> LinearSVM:
    """Stochastic subgradient descent on the L2-regularised hinge loss, one model per class.

    Features are standardised with the training mean and deviation. The bias is
    treated as an extra feature and regularised along with the weights.
    """
    x = np.asarray(train_emb, dtype=float)
    y = np.asarray(train_labels, dtype=int)
    if len(np.unique(y)) < 2:
        raise ValueError("SVM training needs at least two classes")
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    z = np.hstack([(x - mean) / scale, np.ones((len(x), 1))])
    n_classes = max(N_CLASSES, int(y.max()) + 1)
    w = np.zeros((n_classes, z.shape[1]))
    rng = np.random.default_rng(seed)
    shrink = max(0.0, 1.0 - lr * reg)
    for _ in range(epochs):
        for idx in rng.permutation(len(z)):
            target = np.where(np.arange(n_classes) == y[idx], 1.0, -1.0)
            margin = target * (w @ z[idx])
            active = margin < 1.0
            w[active] += lr * target[active, None] * z[idx][None, :]
            w *= shrink
    return LinearSVM(w, mean, scale)


def svm_classify(train_emb, train_labels, test_emb, epochs: int = 50, lr: float = 0.01, reg: float = 1e-3, seed: int = 0):
    return fit_svm(train_emb, train_labels, epochs, lr, reg, seed).predict(test_emb)


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[true][predicted], classes in (Shot, Foul, LostBall) order."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else float("nan")

    def to_csv(self, fh) -> None:
        names = [lab.name for lab in ActionLabel]
        fh.write("true\\pred," + ",".join(names) + "\n")
        for name, row in zip(names, self.counts):
            fh.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")

    def as_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.counts]


def confusion(preds, truth) -> ConfusionMatrix:
    preds = np.asarray(preds)
    truth = np.asarray(truth)
    if preds.shape != truth.shape:
        raise ValueError("predictions and truth differ in length")
    for arr in (preds, truth):
        if arr.size and (arr.min() < 0 or arr.max() >= N_CLASSES):
            raise ValueError(f"unknown label in {np.unique(arr)}")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(counts, (truth.astype(int), preds.astype(int)), 1)
    return ConfusionMatrix(counts)


# -- experiment grid --------------------------------------------------------


@dataclass
class GridRow:
    setup: str
    fraction: float
    accuracy: float
    matrix: ConfusionMatrix
    encoder_tag: str


@dataclass
class GridResult:
    rows: list[GridRow] = field(default_factory=list)


Classifier = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
EncoderFit = Callable[[np.ndarray, str], np.ndarray]


def run_experiment_grid(
    n: int,
    labels,
    setup: str,
    fractions: Sequence[float],
    seed: int,
    fit_and_embed: EncoderFit,
    classify: Classifier = knn_classify,
    groups: Sequence | None = None,
) -> GridResult:
    """Accuracy per training fraction under one of the two setups.

    ``fit_and_embed(train_ids, tag)`` trains an encoder on the given items and
    returns embeddings for all ``n`` items. Setup "a" trains it once on an 80%
    split and varies only the classifier's training fraction; setup "b"
    retrains it for every fraction on exactly the classifier's training items.
    """
    if setup not in SETUPS:
        raise ValueError(f"setup must be one of {SETUPS}, got {setup!r}")
    labels = np.asarray(labels, dtype=int)
    ss = np.random.SeedSequence(seed)
    encoder_seed, *fraction_seeds = (int(s.generate_state(1)[0]) for s in ss.spawn(1 + len(fractions)))

    result = GridResult()
    shared = None
    if setup == "a":
        enc_split = make_split(n, 0.8, encoder_seed, groups)
        shared = fit_and_embed(enc_split.train_ids, "a_80")
    for frac, fseed in zip(fractions, fraction_seeds):
        split = make_split(n, frac, fseed, groups)
        tag = f"{setup}_{int(round(frac * 100))}"
        emb = shared if setup == "a" else fit_and_embed(split.train_ids, tag)
        preds = classify(emb[split.train_ids], labels[split.train_ids], emb[split.test_ids])
        cm = confusion(preds, labels[split.test_ids])
        result.rows.append(GridRow(setup, float(frac), cm.accuracy, cm, "a_80" if setup == "a" else tag))
    return result


def count_inversions(accuracies: Sequence[float]) -> int:
    """Adjacent pairs where accuracy rises as the training fraction shrinks.

    ``accuracies`` must be ordered from the largest fraction to the smallest.
    """
    return sum(1 for hi, lo in zip(accuracies, accuracies[1:]) if lo > hi)
