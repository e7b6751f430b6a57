"""Training loop: synthesize, forward, loss, backward, Adam, plateau stop.

Every step draws one label map, synthesizes an image from it, and derives
the matching target (binary mask for the Dice loss, clamped signed distance
map for the regression losses). Validation images are synthesized once from
the validation maps with fixed seeds; training stops when the validation
loss has not improved for a configured number of evaluations and the best
parameters seen are returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, TrainingDivergedError
from ..grid import LabelMap
from ..losses import dice_loss, wsdt_loss
from ..maskops import derive_target_mask, sdt
from ..synth import SynthConfig, synthesize_sample
from .adam import AdamState, adam_step
from .unet import UNetConfig, init_params, unet_backward, unet_forward

LOSS_KINDS = ("dice", "usdt", "wsdt")

# seed-stream tags so independent draws never collide
_TAG_STEP = 101
_TAG_VAL = 202
_TAG_INIT = 303


@dataclass(frozen=True)
class TrainSettings:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_steps: int = 3000
    eval_every: int = 100
    patience: int = 5
    min_delta: float = 1e-4
    sdt_weight: float = 1e-3   # b: off-boundary MSE weight (wsdt)
    sdt_horizon: float = 4.0   # h: boundary band half-width, mm
    sdt_cap: float = 20.0      # clamp for regression targets, mm
    dice_eps: float = 0.0
    close_iters: int = 10      # target-mask closing radius, voxels
    warmup_steps: int = 0      # linear learning-rate ramp; guards against
                               # early softmax saturation under the Dice loss

    def __post_init__(self):
        if self.max_steps < 1 or self.eval_every < 1 or self.patience < 1:
            raise ParameterError("max_steps, eval_every, patience must be >= 1")


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[float]
    val_history: list[tuple[int, float]]
    best_val: float
    steps: int


def _sample_seed(seed: int, tag: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), tag, int(index)])


def make_target(labels: LabelMap, loss_kind: str, settings: TrainSettings):
    """Training target for one synthesized sample."""
    mask = derive_target_mask(labels, settings.close_iters)
    if loss_kind == "dice":
        onehot = np.empty((2,) + labels.grid.dims, dtype=np.float32)
        onehot[0] = mask.data
        onehot[1] = ~mask.data
        return onehot
    cap = settings.sdt_cap
    if not mask.data.any():
        dist = np.full(labels.grid.dims, cap)
    elif mask.data.all():
        dist = np.full(labels.grid.dims, -cap)
    else:
        dist = np.clip(sdt(mask).data, -cap, cap)
    return dist[None].astype(np.float32)


def _loss_and_grad(out: np.ndarray, target: np.ndarray, loss_kind: str,
                   settings: TrainSettings):
    if loss_kind == "dice":
        res = dice_loss(target, out, eps=settings.dice_eps)
    elif loss_kind == "usdt":
        res = wsdt_loss(target, out, b=1.0, h=settings.sdt_horizon)
    elif loss_kind == "wsdt":
        res = wsdt_loss(target, out, b=settings.sdt_weight, h=settings.sdt_horizon)
    else:
        raise ParameterError(f"unknown loss {loss_kind!r}; pick from {LOSS_KINDS}")
    return res.value, res.grad.astype(out.dtype)


def train(net_cfg: UNetConfig, label_maps: list[LabelMap], synth_cfg: SynthConfig,
          loss_kind: str, val_maps: list[LabelMap], seed: int,
          settings: TrainSettings = TrainSettings(),
          log_fn=None) -> TrainResult:
    """Optimize a network on synthesized samples until validation plateaus."""
    if loss_kind not in LOSS_KINDS:
        raise ParameterError(f"unknown loss {loss_kind!r}; pick from {LOSS_KINDS}")
    if not label_maps:
        raise ParameterError("need at least one training label map")
    expected_head = "softmax2" if loss_kind == "dice" else "sdt1"
    if net_cfg.head != expected_head:
        raise ParameterError(
            f"loss {loss_kind} needs head {expected_head!r}, config has {net_cfg.head!r}"
        )
    for lm in label_maps + val_maps:
        if lm.grid.dims != (net_cfg.input_size,) * 3:
            raise ParameterError(
                f"label map dims {lm.grid.dims} do not match input_size {net_cfg.input_size}"
            )

    params = init_params(net_cfg, _sample_seed(seed, _TAG_INIT, 0))
    state = AdamState.for_params(params, lr=settings.lr, beta1=settings.beta1,
                                 beta2=settings.beta2, eps=settings.eps)

    # fixed validation set, one synthesized sample per validation map
    val_set = []
    for vi, vm in enumerate(val_maps):
        samp = synthesize_sample(vm, synth_cfg, _sample_seed(seed, _TAG_VAL, vi))
        val_set.append((samp.image.data[None], make_target(samp.warped_labels,
                                                           loss_kind, settings)))

    def validation_loss(p):
        total = 0.0
        for x, target in val_set:
            out, _ = unet_forward(p, net_cfg, x)
            value, _ = _loss_and_grad(out, target, loss_kind, settings)
            total += value
        return total / len(val_set)

    history: list[float] = []
    val_history: list[tuple[int, float]] = []
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    stale = 0
    steps = 0

    for step in range(settings.max_steps):
        rng = np.random.default_rng(_sample_seed(seed, _TAG_STEP, step))
        pick = int(rng.integers(len(label_maps)))
        samp = synthesize_sample(label_maps[pick], synth_cfg,
                                 rng.integers(np.iinfo(np.int64).max))
        target = make_target(samp.warped_labels, loss_kind, settings)
        x = samp.image.data[None]

        out, cache = unet_forward(params, net_cfg, x)
        value, grad = _loss_and_grad(out, target, loss_kind, settings)
        if not np.isfinite(value):
            raise TrainingDivergedError(f"non-finite loss {value} at step {step}")
        grads = unet_backward(params, net_cfg, cache, grad)
        if settings.warmup_steps and step < settings.warmup_steps:
            state.lr = settings.lr * (step + 1) / settings.warmup_steps
        else:
            state.lr = settings.lr
        params, state = adam_step(params, grads, state)
        history.append(value)
        steps = step + 1

        if steps % settings.eval_every == 0 and val_set:
            val = validation_loss(params)
            if not np.isfinite(val):
                raise TrainingDivergedError(f"non-finite validation loss at step {steps}")
            val_history.append((steps, val))
            if val < best_val - settings.min_delta:
                best_val = val
                best_params = {k: v.copy() for k, v in params.items()}
                stale = 0
            else:
                stale += 1
            if log_fn is not None:
                log_fn(steps, value, val, stale)
            if stale >= settings.patience:
                break

    if not val_set:
        best_params = params
        best_val = history[-1] if history else np.inf
    return TrainResult(params=best_params, history=history,
                       val_history=val_history, best_val=float(best_val),
                       steps=steps)
