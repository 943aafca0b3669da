"""Dilated causal convolutional encoder in plain numpy, with hand-written gradients.

Block ``i`` (``i = 0 .. depth-1``) computes::

    y = leaky_relu(conv_d(x; w_i) + b_i) + residual(x),   d = 2**i

where ``conv_d`` is a causal convolution (zero padding on the left only),
``w_i = g_i * v_i / ||v_i||`` is weight-normalised per output channel, and
``residual`` is the identity when the channel counts match or a learned 1x1
projection otherwise. The encoder output is a global max over time of the
last block followed by an affine map.

Parameters live in a flat ``dict`` keyed ``block{i}.v``, ``block{i}.g``,
``block{i}.b``, ``block{i}.proj_w``, ``block{i}.proj_b``, ``head.w`` and
``head.b``; gradients use the same keys.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EncoderConfig:
    in_channels: int = 110
    hidden_channels: int = 40
    depth: int = 4
    kernel_size: int = 3
    out_dim: int = 64
    leaky_slope: float = 0.01
    residual: bool = True

    def __post_init__(self):
        for name in ("in_channels", "hidden_channels", "depth", "kernel_size", "out_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def receptive_field(self) -> int:
        return 1 + (self.kernel_size - 1) * (2**self.depth - 1)

    def block_channels(self, i: int) -> tuple[int, int]:
        return (self.in_channels if i == 0 else self.hidden_channels), self.hidden_channels

    def needs_projection(self, i: int) -> bool:
        c_in, c_out = self.block_channels(i)
        return self.residual and c_in != c_out

    def check_window(self, window: int) -> bool:
        """Warn (and return False) if the last time step cannot see a whole window."""
        if self.receptive_field < window:
            warnings.warn(
                f"receptive field {self.receptive_field} is shorter than the window {window}",
                stacklevel=2,
            )
            return False
        return True


@dataclass
class EncoderParams:
    cfg: EncoderConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.tensors[key]

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def effective_weight(self, i: int) -> np.ndarray:
        return _weight_norm(self.tensors[f"block{i}.v"], self.tensors[f"block{i}.g"])[0]


def _weight_norm(v: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.sqrt(np.sum(v * v, axis=(1, 2)))
    scale = np.divide(g, norm, out=np.zeros_like(norm), where=norm > 0)
    return v * scale[:, None, None], norm


def init_params(cfg: EncoderConfig, seed: int = 0) -> EncoderParams:
    """Uniform(-k, k) directions with k = sqrt(1/fan_in), gains equal to the initial norms, zero biases."""
    rng = np.random.default_rng(seed)
    t = {}
    for i in range(cfg.depth):
        c_in, c_out = cfg.block_channels(i)
        bound = np.sqrt(1.0 / (c_in * cfg.kernel_size))
        v = rng.uniform(-bound, bound, (c_out, c_in, cfg.kernel_size))
        t[f"block{i}.v"] = v
        t[f"block{i}.g"] = np.sqrt(np.sum(v * v, axis=(1, 2)))
        t[f"block{i}.b"] = np.zeros(c_out)
        if cfg.needs_projection(i):
            bound = np.sqrt(1.0 / c_in)
            t[f"block{i}.proj_w"] = rng.uniform(-bound, bound, (c_out, c_in))
            t[f"block{i}.proj_b"] = np.zeros(c_out)
    bound = np.sqrt(1.0 / cfg.hidden_channels)
    t["head.w"] = rng.uniform(-bound, bound, (cfg.out_dim, cfg.hidden_channels))
    t["head.b"] = np.zeros(cfg.out_dim)
    return EncoderParams(cfg, t)


# -- forward ----------------------------------------------------------------


@dataclass
class _BlockCache:
    x: np.ndarray
    cols: np.ndarray
    z: np.ndarray
    w: np.ndarray
    norm: np.ndarray


@dataclass
class ForwardCache:
    """Activations kept by :func:`encode_with_cache` for :func:`backward`."""

    blocks: list[_BlockCache]
    pooled: np.ndarray
    argmax: np.ndarray
    squeeze: bool


def _as_batch(x, cfg: EncoderConfig) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != cfg.in_channels:
        raise ValueError(f"expected input (batch, {cfg.in_channels}, T) or ({cfg.in_channels}, T), got {x.shape}")
    if x.shape[2] < 1:
        raise ValueError("input needs at least one time step")
    return x, squeeze


def _causal_columns(x: np.ndarray, kernel: int, dilation: int) -> np.ndarray:
    b, c, t = x.shape
    pad = (kernel - 1) * dilation
    xp = np.concatenate([np.zeros((b, c, pad)), x], axis=2) if pad else x
    # tap j looks back (kernel - 1 - j) * dilation steps; the last tap is the present
    cols = np.stack([xp[:, :, j * dilation : j * dilation + t] for j in range(kernel)], axis=2)
    return cols.reshape(b, c * kernel, t)


def _forward(params: EncoderParams, x: np.ndarray, keep: bool):
    cfg = params.cfg
    caches = []
    for i in range(cfg.depth):
        p = params.tensors
        w, norm = _weight_norm(p[f"block{i}.v"], p[f"block{i}.g"])
        cols = _causal_columns(x, cfg.kernel_size, 2**i)
        z = np.matmul(w.reshape(w.shape[0], -1), cols) + p[f"block{i}.b"][:, None]
        y = np.where(z > 0, z, cfg.leaky_slope * z)
        if cfg.needs_projection(i):
            y = y + np.matmul(p[f"block{i}.proj_w"], x) + p[f"block{i}.proj_b"][:, None]
        elif cfg.residual:
            y = y + x
        if keep:
            caches.append(_BlockCache(x, cols, z, w, norm))
        x = y
    return x, caches


def forward_sequence(params: EncoderParams, x) -> np.ndarray:
    """Hidden sequence (hidden_channels, T), or (batch, hidden_channels, T) for batched input."""
    xb, squeeze = _as_batch(x, params.cfg)
    h, _ = _forward(params, xb, keep=False)
    return h[0] if squeeze else h


def _pool_head(params: EncoderParams, h: np.ndarray):
    idx = np.argmax(h, axis=2)  # first maximiser on ties
    pooled = np.take_along_axis(h, idx[..., None], axis=2)[..., 0]
    emb = pooled @ params.tensors["head.w"].T + params.tensors["head.b"]
    return emb, pooled, idx


def encode(params: EncoderParams, x) -> np.ndarray:
    """Embedding of shape (out_dim,), or (batch, out_dim) for batched input."""
    xb, squeeze = _as_batch(x, params.cfg)
    h, _ = _forward(params, xb, keep=False)
    emb, _, _ = _pool_head(params, h)
    return emb[0] if squeeze else emb


def encode_with_cache(params: EncoderParams, x) -> tuple[np.ndarray, ForwardCache]:
    xb, squeeze = _as_batch(x, params.cfg)
    h, caches = _forward(params, xb, keep=True)
    emb, pooled, idx = _pool_head(params, h)
    cache = ForwardCache(caches, pooled, idx, squeeze)
    return (emb[0] if squeeze else emb), cache


def encode_batched(params: EncoderParams, x, batch_size: int = 256) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return np.zeros((0, params.cfg.out_dim))
    return np.concatenate([encode(params, x[i : i + batch_size]) for i in range(0, len(x), batch_size)])


# -- backward ---------------------------------------------------------------


def backward(params: EncoderParams, cache: ForwardCache | None, grad_emb) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. every parameter, given dLoss/dEmbedding.

    Parameters the forward pass did not use (e.g. a projection on a block whose
    channel counts match) receive exact zeros.
    """
    if cache is None or len(cache.blocks) != params.cfg.depth:
        raise ValueError("missing activations: run encode_with_cache on this batch first")
    cfg = params.cfg
    p = params.tensors
    grads = params.zeros_like()
    de = np.asarray(grad_emb, dtype=float)
    if cache.squeeze:
        de = de[None]
    if de.shape != (cache.pooled.shape[0], cfg.out_dim):
        raise ValueError(f"upstream gradient has shape {de.shape}, expected {(cache.pooled.shape[0], cfg.out_dim)}")

    grads["head.w"] = de.T @ cache.pooled
    grads["head.b"] = de.sum(axis=0)
    dpool = de @ p["head.w"]
    last = cache.blocks[-1]
    batch, t_len = last.x.shape[0], last.x.shape[2]
    dy = np.zeros((batch, cfg.hidden_channels, t_len))
    np.put_along_axis(dy, cache.argmax[..., None], dpool[..., None], axis=2)

    for i in reversed(range(cfg.depth)):
        bc = cache.blocks[i]
        c_out, c_in, k = bc.w.shape
        d = 2**i
        dz = dy * np.where(bc.z > 0, 1.0, cfg.leaky_slope)
        grads[f"block{i}.b"] = dz.sum(axis=(0, 2))
        dw = np.tensordot(dz, bc.cols, axes=([0, 2], [0, 2])).reshape(c_out, c_in, k)

        v, g = p[f"block{i}.v"], p[f"block{i}.g"]
        safe = np.where(bc.norm > 0, bc.norm, 1.0)
        dg = np.where(bc.norm > 0, np.sum(dw * v, axis=(1, 2)) / safe, 0.0)
        grads[f"block{i}.g"] = dg
        grads[f"block{i}.v"] = (g / safe)[:, None, None] * (dw - (dg / safe)[:, None, None] * v)

        dcols = np.matmul(bc.w.reshape(c_out, -1).T, dz).reshape(batch, c_in, k, t_len)
        dx = np.zeros((batch, c_in, t_len))
        for j in range(k):
            shift = (k - 1 - j) * d
            if shift < t_len:
                dx[:, :, : t_len - shift] += dcols[:, :, j, shift:]

        if cfg.needs_projection(i):
            grads[f"block{i}.proj_w"] = np.tensordot(dy, bc.x, axes=([0, 2], [0, 2]))
            grads[f"block{i}.proj_b"] = dy.sum(axis=(0, 2))
            dx += np.matmul(p[f"block{i}.proj_w"].T, dy)
        elif cfg.residual:
            dx += dy
        dy = dx
    return grads


# -- optimiser --------------------------------------------------------------


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: EncoderParams,
    grads: dict[str, np.ndarray],
    state: AdamState | None = None,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[EncoderParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state, inputs untouched."""
    state = state or AdamState()
    if grads.keys() != params.tensors.keys():
        raise ValueError("gradient keys do not match parameter keys")
    step = state.step + 1
    new_t, new_m, new_v = {}, {}, {}
    for key, value in params.tensors.items():
        grad = grads[key]
        if grad.shape != value.shape:
            raise ValueError(f"shape mismatch for {key}: {grad.shape} vs {value.shape}")
        m = beta1 * state.m.get(key, 0.0) + (1 - beta1) * grad
        v = beta2 * state.v.get(key, 0.0) + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1**step)
        v_hat = v / (1 - beta2**step)
        new_t[key] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[key], new_v[key] = m, v
    return EncoderParams(params.cfg, new_t), AdamState(step, new_m, new_v)


# -- checkpoints ------------------------------------------------------------


def save_checkpoint(params: EncoderParams, fh) -> None:
    meta = {"version": CHECKPOINT_VERSION, "config": asdict(params.cfg)}
    arrays = {f"t/{k}": v for k, v in params.tensors.items()}
    np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_checkpoint(fh) -> EncoderParams:
    with np.load(fh, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        tensors = {k[2:]: data[k].copy() for k in data.files if k.startswith("t/")}
    return EncoderParams(EncoderConfig(**meta["config"]), tensors)


def checkpoint_bytes(params: EncoderParams) -> bytes:
    buf = io.BytesIO()
    save_checkpoint(params, buf)
    return buf.getvalue()
