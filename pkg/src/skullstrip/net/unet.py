"""3D U-Net: configuration, parameter initialization, forward and backward.

Encoder and decoder run two activated 3x3x3 convolutions per resolution
level, with 2x max pooling down and nearest-neighbor upsampling plus skip
concatenation back up. The head is one more 3x3x3 convolution producing
either two softmax channels (brain, background) or one linear channel
regressing a signed boundary distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from . import layers

HEADS = ("softmax2", "sdt1")


@dataclass(frozen=True)
class UNetConfig:
    levels: int = 3
    features_per_level: tuple[int, ...] = (8, 16, 32)
    convs_per_level: int = 2
    kernel: int = 3
    leaky_slope: float = 0.2
    head: str = "softmax2"
    input_size: int = 32
    in_channels: int = 1
    # initial foreground probability of the softmax head; starting at the
    # class prior keeps early Dice gradients alive instead of letting the
    # optimizer dive into a saturated all-background state
    head_prior: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "features_per_level",
                           tuple(int(f) for f in self.features_per_level))
        if self.levels < 1:
            raise ParameterError("levels must be >= 1")
        if len(self.features_per_level) != self.levels:
            raise ParameterError(
                f"need {self.levels} feature widths, got {len(self.features_per_level)}"
            )
        if self.convs_per_level < 1:
            raise ParameterError("convs_per_level must be >= 1")
        if self.kernel != 3:
            raise ParameterError("only 3x3x3 kernels are supported")
        if self.head not in HEADS:
            raise ParameterError(f"head must be one of {HEADS}")
        if self.input_size % (1 << (self.levels - 1)):
            raise ParameterError(
                f"input_size {self.input_size} not divisible by 2^{self.levels - 1}"
            )
        if not 0.0 < self.head_prior < 1.0:
            raise ParameterError("head_prior must be inside (0, 1)")

    @classmethod
    def scaled(cls, levels: int, base_features: int, input_size: int,
               head: str = "softmax2") -> "UNetConfig":
        """Feature widths doubling from a base, the usual U-Net progression."""
        feats = tuple(base_features << i for i in range(levels))
        return cls(levels=levels, features_per_level=feats, head=head,
                   input_size=input_size)

    @property
    def out_channels(self) -> int:
        return 2 if self.head == "softmax2" else 1


def conv_specs(cfg: UNetConfig) -> list[tuple[str, int, int]]:
    """(name, in_channels, out_channels) of every convolution, in order."""
    specs = []
    prev = cfg.in_channels
    for lvl in range(cfg.levels):
        width = cfg.features_per_level[lvl]
        for j in range(cfg.convs_per_level):
            specs.append((f"enc{lvl}_conv{j}", prev, width))
            prev = width
    for lvl in range(cfg.levels - 2, -1, -1):
        width = cfg.features_per_level[lvl]
        prev = prev + width  # skip concatenation
        for j in range(cfg.convs_per_level):
            specs.append((f"dec{lvl}_conv{j}", prev, width))
            prev = width
    specs.append(("head", prev, cfg.out_channels))
    return specs


def init_params(cfg: UNetConfig, seed, dtype=np.float32) -> dict[str, np.ndarray]:
    """He-style initialization; weights keyed '<conv>_w' / '<conv>_b'."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, cin, cout in conv_specs(cfg):
        std = np.sqrt(2.0 / (cin * 27))
        params[name + "_w"] = (std * rng.standard_normal((cout, cin, 3, 3, 3))).astype(dtype)
        params[name + "_b"] = np.zeros(cout, dtype=dtype)
    if cfg.head == "softmax2":
        logit = np.log(cfg.head_prior / (1.0 - cfg.head_prior))
        params["head_b"] = np.array([logit, 0.0], dtype=dtype)
    return params


def zero_params_like(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def check_params(cfg: UNetConfig, params: dict[str, np.ndarray]) -> None:
    expected = {}
    for name, cin, cout in conv_specs(cfg):
        expected[name + "_w"] = (cout, cin, 3, 3, 3)
        expected[name + "_b"] = (cout,)
    if set(expected) != set(params):
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        raise ParameterError(f"parameter names mismatch: missing={missing} extra={extra}")
    for key, shape in expected.items():
        if tuple(params[key].shape) != shape:
            raise ParameterError(
                f"parameter {key} has shape {params[key].shape}, expected {shape}"
            )


def _conv_block(x, params, name, slope, trace):
    w, b = params[name + "_w"], params[name + "_b"]
    z = layers.conv3d_forward(x, w, b)
    a = layers.leaky_relu(z, slope)
    trace.append((name, x, z))
    return a


def unet_forward(params: dict[str, np.ndarray], cfg: UNetConfig, x: np.ndarray):
    """Run the network; returns (output, cache) with ``cache`` for backward.

    ``x`` is (in_channels, s, s, s) with s = cfg.input_size. The softmax head
    returns per-voxel probabilities summing to one across its two channels.
    """
    if x.ndim == 3:
        x = x[None]
    if x.shape != (cfg.in_channels,) + (cfg.input_size,) * 3:
        raise ParameterError(
            f"input shape {x.shape} does not match config "
            f"({cfg.in_channels}, {cfg.input_size}^3)"
        )
    slope = cfg.leaky_slope
    trace: list = []
    skips = []
    pools = []
    a = x
    for lvl in range(cfg.levels):
        for j in range(cfg.convs_per_level):
            a = _conv_block(a, params, f"enc{lvl}_conv{j}", slope, trace)
        if lvl < cfg.levels - 1:
            skips.append(a)
            a, idx = layers.maxpool2(a)
            pools.append(idx)
    concat_splits = []
    for lvl in range(cfg.levels - 2, -1, -1):
        up = layers.upsample2(a)
        skip = skips[lvl]
        concat_splits.append(skip.shape[0])
        a = np.concatenate([skip, up], axis=0)
        for j in range(cfg.convs_per_level):
            a = _conv_block(a, params, f"dec{lvl}_conv{j}", slope, trace)
    w, b = params["head_w"], params["head_b"]
    logits = layers.conv3d_forward(a, w, b)
    trace.append(("head", a, logits))
    if cfg.head == "softmax2":
        out = layers.softmax_channels(logits)
    else:
        out = logits
    cache = {"trace": trace, "pools": pools, "splits": concat_splits, "out": out}
    return out, cache


def unet_backward(params: dict[str, np.ndarray], cfg: UNetConfig, cache,
                  grad_out: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. all parameters.

    ``grad_out`` is the loss gradient w.r.t. the network output (post-softmax
    for the two-channel head).
    """
    slope = cfg.leaky_slope
    trace = list(cache["trace"])
    pools = cache["pools"]
    splits = list(cache["splits"])
    grads: dict[str, np.ndarray] = {}

    def conv_block_backward(g):
        name, x_in, z = trace.pop()
        g = layers.leaky_relu_backward(z, g, slope)
        gx, gw, gb = layers.conv3d_backward(x_in, params[name + "_w"], g)
        grads[name + "_w"] = gw
        grads[name + "_b"] = gb
        return gx

    if cfg.head == "softmax2":
        g = layers.softmax_channels_backward(cache["out"], grad_out)
    else:
        g = grad_out

    # head conv has no activation
    name, x_in, _z = trace.pop()
    gx, gw, gb = layers.conv3d_backward(x_in, params[name + "_w"], g)
    grads[name + "_w"] = gw
    grads[name + "_b"] = gb
    g = gx

    # decoder, unwinding from the shallowest level (0) to the deepest (levels-2)
    skip_grads: list[np.ndarray | None] = [None] * (cfg.levels - 1)
    for enc_lvl in range(cfg.levels - 1):
        for _ in range(cfg.convs_per_level):
            g = conv_block_backward(g)
        split = splits.pop()
        skip_grads[enc_lvl] = g[:split]
        g = layers.upsample2_backward(g[split:])

    # encoder, from the bottleneck back to the input
    for lvl in range(cfg.levels - 1, -1, -1):
        for _ in range(cfg.convs_per_level):
            g = conv_block_backward(g)
        if lvl > 0:
            g = layers.maxpool2_backward(pools[lvl - 1], g)
            g = g + skip_grads[lvl - 1]
    return grads
