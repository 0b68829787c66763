"""Minimal differentiable CNN on numpy arrays.

The network is a stack of conv blocks (3x3 "same" convolution, optional
ReLU, optional 2x2 max-pool) followed by global average pooling and a
dense layer producing one pre-sigmoid logit. Forward passes cache every
intermediate activation; the reverse pass returns gradients of the logit
with respect to the input image, every block's post-activation feature
map, and all parameters.

Arrays are float64 in memory for gradient fidelity; the 32-bit float
representation applies at the serialization boundary (see checkpoint.py).
ReLU's subgradient at exactly 0 is taken as 0. Max-pool ties resolve to
the first element in window order, so every result is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class ConvBlockSpec:
    """One conv block: 3x3 same convolution with `filters` output channels."""

    filters: int
    relu: bool = True
    pool: bool = True


@dataclass(frozen=True)
class ModelConfig:
    in_channels: int
    height: int
    width: int
    blocks: tuple[ConvBlockSpec, ...]

    def __post_init__(self):
        if self.in_channels < 1:
            raise ValueError(f"in_channels must be >= 1, got {self.in_channels}")
        if self.height < 1 or self.width < 1:
            raise ValueError(f"input size must be >= 1, got {self.height}x{self.width}")
        if len(self.blocks) < 1:
            raise ValueError("model needs at least one conv block")
        if any(b.filters < 1 for b in self.blocks):
            raise ValueError("every conv block needs at least one filter")
        h, w = self.height, self.width
        for i, b in enumerate(self.blocks):
            if b.pool:
                h, w = h // 2, w // 2
            if h < 1 or w < 1:
                raise ValueError(f"spatial size vanishes after block {i} ({h}x{w})")

    def block_input_shapes(self) -> list[tuple[int, int, int]]:
        """(channels, height, width) seen by each block."""
        shapes = []
        c, h, w = self.in_channels, self.height, self.width
        for b in self.blocks:
            shapes.append((c, h, w))
            c = b.filters
            if b.pool:
                h, w = h // 2, w // 2
        return shapes

    @property
    def feature_channels(self) -> int:
        return self.blocks[-1].filters

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Parameter names and shapes in declaration (serialization) order."""
        shapes = []
        c = self.in_channels
        for i, b in enumerate(self.blocks):
            shapes.append((f"conv{i}.weight", (b.filters, c, 3, 3)))
            shapes.append((f"conv{i}.bias", (b.filters,)))
            c = b.filters
        shapes.append(("head.weight", (c,)))
        shapes.append(("head.bias", ()))
        return shapes


@dataclass
class ConvNet:
    """Model config plus parameter arrays, with a version counter.

    The version is bumped whenever parameters are mutated so that stale
    forward caches are rejected by backward().
    """

    config: ModelConfig
    params: dict[str, np.ndarray]
    version: int = 0

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "ConvNet":
        """He-uniform weights, zero biases, drawn in declaration order."""
        params = {}
        for name, shape in config.param_shapes():
            if name.endswith(".bias"):
                params[name] = np.zeros(shape)
            else:
                fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else shape[0]
                limit = np.sqrt(6.0 / fan_in)
                params[name] = rng.uniform(-limit, limit, size=shape)
        return cls(config=config, params=params)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ConvNet":
        params = {name: np.zeros(shape) for name, shape in config.param_shapes()}
        return cls(config=config, params=params)

    def bump_version(self) -> None:
        self.version += 1

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict[str, np.ndarray]) -> None:
        for k in self.params:
            self.params[k][...] = params[k]
        self.bump_version()


@dataclass
class BlockCache:
    inp: np.ndarray       # block input (N, C, H, W)
    pre: np.ndarray       # conv output before activation
    act: np.ndarray       # after activation (== pre when relu disabled)
    pooled: np.ndarray | None
    pool_idx: np.ndarray | None


@dataclass
class ForwardCache:
    """Every activation of one forward pass, keyed by block index."""

    version: int
    blocks: list[BlockCache]
    features: np.ndarray  # (N, C_last) after global average pooling
    logits: np.ndarray    # (N,)


@dataclass
class BackwardResult:
    input_grad: np.ndarray            # same shape as the input batch
    layer_grads: dict[int, np.ndarray]  # block index -> grad wrt post-activation map
    param_grads: dict[str, np.ndarray]


def _conv3x3(x, weight, bias):
    n, c, h, w = x.shape
    f = weight.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))          # (n, c, h, w, 3, 3)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * 9)
    out = cols @ weight.reshape(f, -1).T + bias
    return out.reshape(n, h, w, f).transpose(0, 3, 1, 2)


def _conv3x3_backward(x, weight, d_out):
    n, c, h, w = x.shape
    f = weight.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * 9)
    d_flat = d_out.transpose(0, 2, 3, 1).reshape(n * h * w, f)
    d_weight = (d_flat.T @ cols).reshape(f, c, 3, 3)
    d_bias = d_flat.sum(axis=0)
    d_cols = d_flat @ weight.reshape(f, -1)
    d_win = d_cols.reshape(n, h, w, c, 3, 3).transpose(0, 3, 1, 2, 4, 5)
    d_xp = np.zeros((n, c, h + 2, w + 2))
    for i in range(3):
        for j in range(3):
            d_xp[:, :, i : i + h, j : j + w] += d_win[:, :, :, :, i, j]
    return d_xp[:, :, 1 : h + 1, 1 : w + 1], d_weight, d_bias


def _maxpool2(x):
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    xw = (
        x[:, :, : 2 * h2, : 2 * w2]
        .reshape(n, c, h2, 2, w2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h2, w2, 4)
    )
    idx = xw.argmax(axis=-1)
    pooled = np.take_along_axis(xw, idx[..., None], axis=-1)[..., 0]
    return pooled, idx


def _maxpool2_backward(x_shape, idx, d_pooled):
    n, c, h, w = x_shape
    h2, w2 = idx.shape[2], idx.shape[3]
    d_xw = np.zeros((n, c, h2, w2, 4))
    np.put_along_axis(d_xw, idx[..., None], d_pooled[..., None], axis=-1)
    d_x = np.zeros(x_shape)
    d_x[:, :, : 2 * h2, : 2 * w2] = (
        d_xw.reshape(n, c, h2, w2, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, 2 * h2, 2 * w2)
    )
    return d_x


def forward_batch(net: ConvNet, x: np.ndarray) -> ForwardCache:
    """Run a batch (N, C, H, W) through the network, caching everything."""
    cfg = net.config
    if x.ndim != 4 or x.shape[1:] != (cfg.in_channels, cfg.height, cfg.width):
        raise ValueError(
            f"input shape {x.shape[1:] if x.ndim == 4 else x.shape} does not match "
            f"model input ({cfg.in_channels}, {cfg.height}, {cfg.width})"
        )
    blocks = []
    cur = x
    for i, spec in enumerate(cfg.blocks):
        pre = _conv3x3(cur, net.params[f"conv{i}.weight"], net.params[f"conv{i}.bias"])
        act = np.maximum(pre, 0.0) if spec.relu else pre
        if spec.pool:
            pooled, idx = _maxpool2(act)
        else:
            pooled, idx = None, None
        blocks.append(BlockCache(inp=cur, pre=pre, act=act, pooled=pooled, pool_idx=idx))
        cur = pooled if spec.pool else act
    features = cur.mean(axis=(2, 3))
    logits = features @ net.params["head.weight"] + net.params["head.bias"]
    return ForwardCache(version=net.version, blocks=blocks, features=features, logits=logits)


def forward(net: ConvNet, image: np.ndarray) -> tuple[float, ForwardCache]:
    """Forward one (C, H, W) image; returns the scalar logit and the cache."""
    cache = forward_batch(net, np.asarray(image, dtype=float)[None])
    return float(cache.logits[0]), cache


def backward_batch(net: ConvNet, cache: ForwardCache, d_logits: np.ndarray) -> BackwardResult:
    """Reverse pass seeded with per-sample d(loss)/d(logit) values."""
    if cache.version != net.version:
        raise ValueError(
            f"stale forward cache: built at parameter version {cache.version}, "
            f"model is at {net.version}"
        )
    cfg = net.config
    d_logits = np.asarray(d_logits, dtype=float)
    param_grads = {}
    param_grads["head.weight"] = d_logits @ cache.features
    param_grads["head.bias"] = np.asarray(d_logits.sum())
    d_features = d_logits[:, None] * net.params["head.weight"][None, :]

    last = cache.blocks[-1]
    last_map = last.pooled if cfg.blocks[-1].pool else last.act
    gh, gw = last_map.shape[2:]
    d_cur = np.broadcast_to(d_features[:, :, None, None] / (gh * gw), last_map.shape).copy()

    layer_grads = {}
    for i in range(len(cfg.blocks) - 1, -1, -1):
        spec, bc = cfg.blocks[i], cache.blocks[i]
        if spec.pool:
            d_act = _maxpool2_backward(bc.act.shape, bc.pool_idx, d_cur)
        else:
            d_act = d_cur
        layer_grads[i] = d_act
        d_pre = d_act * (bc.pre > 0) if spec.relu else d_act
        d_cur, d_w, d_b = _conv3x3_backward(
            bc.inp, net.params[f"conv{i}.weight"], d_pre
        )
        param_grads[f"conv{i}.weight"] = d_w
        param_grads[f"conv{i}.bias"] = d_b
    return BackwardResult(input_grad=d_cur, layer_grads=layer_grads, param_grads=param_grads)


def backward(net: ConvNet, cache: ForwardCache, seed_grad: float = 1.0) -> BackwardResult:
    """Gradients of (seed_grad * logit) for a single-image cache."""
    n = cache.logits.shape[0]
    result = backward_batch(net, cache, np.full(n, float(seed_grad)))
    return result


def bilinear_upsample(src: np.ndarray, out_shape: tuple[int, int]) -> np.ndarray:
    """Align-corners bilinear interpolation of a 2-D map to (H, W).

    Corners map exactly onto corners and constant fields are reproduced
    bit-exactly (the two-point lerp form never leaves [min, max] of the
    source). Downsampling is not supported.
    """
    src = np.asarray(src, dtype=float)
    if src.ndim != 2:
        raise ValueError(f"expected a 2-D map, got shape {src.shape}")
    h, w = src.shape
    out_h, out_w = out_shape
    if out_h < h or out_w < w:
        raise ValueError(f"target {out_h}x{out_w} is smaller than source {h}x{w}")
    if (out_h, out_w) == (h, w):
        return src.copy()

    def axis_coords(n_src, n_out):
        if n_out == 1:
            return np.zeros(1, dtype=int), np.zeros(1, dtype=int), np.zeros(1)
        # Multiply before dividing so the last coordinate lands exactly on n_src-1.
        pos = (np.arange(n_out) * (n_src - 1)) / (n_out - 1)
        lo = np.floor(pos).astype(int)
        lo = np.minimum(lo, n_src - 1)
        hi = np.minimum(lo + 1, n_src - 1)
        return lo, hi, pos - lo

    y0, y1, wy = axis_coords(h, out_h)
    x0, x1, wx = axis_coords(w, out_w)
    a = src[np.ix_(y0, x0)]
    b = src[np.ix_(y0, x1)]
    c = src[np.ix_(y1, x0)]
    d = src[np.ix_(y1, x1)]
    top = a + wx[None, :] * (b - a)
    bottom = c + wx[None, :] * (d - c)
    return top + wy[:, None] * (bottom - top)
