"""Presence-potential features: triangular memberships over five court regions per axis."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .court import CHANNEL_NAMES, N_RAW_CHANNELS

N_REGIONS = 5
X_REGIONS = ("A", "B", "C", "D", "E")
Y_REGIONS = ("M", "N", "O", "P", "Q")


class TriParams(NamedTuple):
    a: float
    b: float
    c: float

    def check(self) -> "TriParams":
        lo, hi = min(self.a, self.c), max(self.a, self.c)
        if not lo < self.b < hi:
            raise ValueError(f"peak b={self.b} must lie strictly between a={self.a} and c={self.c}")
        return self


DEFAULT_X = (
    TriParams(98, 94, 72),
    TriParams(94, 72, 47),
    TriParams(72, 47, 22),
    TriParams(47, 22, 0),
    TriParams(22, 0, -4),
)
DEFAULT_Y = (
    TriParams(-2, 0, 17),
    TriParams(0, 17, 33),
    TriParams(17, 33, 50),
    TriParams(33, 50, 51),
    TriParams(50, 51, 60),
)


def tri_membership(x, p: TriParams):
    """max(min((x - a)/(b - a), (c - x)/(c - b)), 0), elementwise.

    Returns a float for scalar input, an ndarray otherwise.
    """
    a, b, c = p
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.maximum(np.minimum((x - a) / (b - a), (c - x) / (c - b)), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class KernelBank:
    x_params: tuple[TriParams, ...] = DEFAULT_X
    y_params: tuple[TriParams, ...] = DEFAULT_Y

    def __post_init__(self):
        for params in (self.x_params, self.y_params):
            if len(params) != N_REGIONS:
                raise ValueError(f"need {N_REGIONS} triangles per axis, got {len(params)}")
            for p in params:
                TriParams(*p).check()

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.x_params, dtype=float), np.array(self.y_params, dtype=float)

    @classmethod
    def from_csv(cls, fh) -> "KernelBank":
        """Read an override file with header ``axis,region,a,b,c``; rows keep region order per axis."""
        rows = {"x": [], "y": []}
        for row in csv.DictReader(fh):
            axis = row["axis"].strip().lower()
            if axis not in rows:
                raise ValueError(f"unknown axis {row['axis']!r} in kernel file")
            rows[axis].append(TriParams(float(row["a"]), float(row["b"]), float(row["c"])))
        return cls(tuple(rows["x"]), tuple(rows["y"]))

    def to_csv(self, fh) -> None:
        fh.write("axis,region,a,b,c\n")
        for axis, names, params in (("x", X_REGIONS, self.x_params), ("y", Y_REGIONS, self.y_params)):
            for name, p in zip(names, params):
                fh.write(f"{axis},{name},{p.a!r},{p.b!r},{p.c!r}\n")


def fuzzy_channel_names() -> list[str]:
    names = []
    for ch in CHANNEL_NAMES:
        regions = X_REGIONS if ch.endswith(".x") else Y_REGIONS
        names.extend(f"{ch}:{r}" for r in regions)
    return names


def fuzzify(series, bank: KernelBank | None = None) -> np.ndarray:
    """Expand (..., 22, W) raw coordinates into (..., 110, W) memberships.

    Each input channel becomes five consecutive output channels, one per
    region in table order; even channels use the x triangles, odd ones the y
    triangles.
    """
    bank = bank or KernelBank()
    x = np.asarray(series, dtype=float)
    if x.ndim < 2 or x.shape[-2] != N_RAW_CHANNELS:
        raise ValueError(f"expected {N_RAW_CHANNELS} raw channels, got shape {x.shape}")
    px, py = bank.as_arrays()
    params = np.where((np.arange(N_RAW_CHANNELS) % 2 == 0)[:, None, None], px[None], py[None])
    a, b, c = (params[..., i][..., None] for i in range(3))  # (22, 5, 1)
    v = x[..., :, None, :]  # (..., 22, 1, W)
    with np.errstate(invalid="ignore"):
        out = np.maximum(np.minimum((v - a) / (b - a), (c - v) / (c - b)), 0.0)
    return out.reshape(*x.shape[:-2], N_RAW_CHANNELS * N_REGIONS, x.shape[-1])
