"""Network assembly: parameter store, forward pass, loss, and backpropagation.

Parameters live in a flat name -> array dict ordered by `parameter_names`; the
same order defines checkpoint layout and optimizer traversal.  The backward
pass is hand-derived; convolution input gradients are skipped for the first
stage since nothing below it trains.  When the convolutional stages are frozen
their flattened output depends only on the input, so training can run on
features computed once (`conv_features`) through `head_loss_and_gradients`;
that path consumes identical dropout draws and reproduces full-pass updates bit
for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError, NumericFailureError
from .config import NetworkConfig
from .layers import (
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    dropout_mask,
    mask_inplace,
    maxpool_backward,
    maxpool_forward,
    relu,
)


def parameter_names(config: NetworkConfig) -> list[str]:
    """Canonical parameter order: conv stages, then heads d, n, k."""
    names = []
    for i in range(len(config.conv_channels)):
        names += [f"conv{i + 1}_w", f"conv{i + 1}_b"]
    for head in config.heads:
        for j in range(len(config.head_widths(head))):
            names += [f"{head}{j + 1}_w", f"{head}{j + 1}_b"]
    return names


def parameter_shapes(config: NetworkConfig) -> dict[str, tuple]:
    shapes = {}
    c_in = config.in_channels
    for i, (c_out, kernel) in enumerate(zip(config.conv_channels, config.conv_kernels)):
        shapes[f"conv{i + 1}_w"] = (c_out, c_in, kernel)
        shapes[f"conv{i + 1}_b"] = (c_out,)
        c_in = c_out
    for head in config.heads:
        for j, (fan_in, fan_out) in enumerate(config.head_layers(head)):
            shapes[f"{head}{j + 1}_w"] = (fan_in, fan_out)
            shapes[f"{head}{j + 1}_b"] = (fan_out,)
    return shapes


@dataclass
class ModelWeights:
    """Trainable state: parameter arrays, optimizer accumulators, epoch count."""

    config: NetworkConfig
    arrays: dict
    accumulators: dict
    epoch: int = 0

    @property
    def dtype(self):
        return next(iter(self.arrays.values())).dtype

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.config,
                            {k: v.copy() for k, v in self.arrays.items()},
                            {k: v.copy() for k, v in self.accumulators.items()},
                            self.epoch)

    def astype(self, dtype) -> "ModelWeights":
        return ModelWeights(self.config,
                            {k: v.astype(dtype) for k, v in self.arrays.items()},
                            {k: v.astype(dtype) for k, v in self.accumulators.items()},
                            self.epoch)


def init_weights(config: NetworkConfig, seed: int, dtype=np.float64) -> ModelWeights:
    """Glorot-uniform weights, zero biases and accumulators.

    Draws happen in float64 in canonical parameter order, so a float32 model
    starts from the rounded values of the float64 one.
    """
    rng = np.random.default_rng(seed)
    dtype = np.dtype(dtype)
    arrays = {}
    for name, shape in parameter_shapes(config).items():
        if name.endswith("_b"):
            arrays[name] = np.zeros(shape, dtype=dtype)
            continue
        if len(shape) == 3:
            c_out, c_in, kernel = shape
            fan_in, fan_out = c_in * kernel, c_out * kernel
        else:
            fan_in, fan_out = shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        arrays[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    accumulators = {name: np.zeros_like(array) for name, array in arrays.items()}
    return ModelWeights(config, arrays, accumulators, epoch=0)


def _conv_forward(weights: ModelWeights, x, keep_caches: bool):
    """Run the conv stack; returns (flattened features, caches or None)."""
    config = weights.config
    caches = [] if keep_caches else None
    out = x
    for i, pool in enumerate(config.pool_sizes):
        w = weights.arrays[f"conv{i + 1}_w"]
        b = weights.arrays[f"conv{i + 1}_b"]
        z, col = conv1d_forward(out, w, b)
        if keep_caches:
            active = z > 0.0
        np.maximum(z, 0.0, out=z)
        pooled, winner = maxpool_forward(z, pool, need_mask=keep_caches)
        if keep_caches:
            caches.append((out.shape, col, active, winner, pool, z.shape[1]))
        out = pooled
    feats = out.reshape(out.shape[0], -1)
    return feats, caches


def conv_features(weights: ModelWeights, x) -> np.ndarray:
    """Flattened conv-stack output, no gradient bookkeeping."""
    feats, _ = _conv_forward(weights, np.asarray(x, dtype=weights.dtype), False)
    return feats


def conv_stage_activations(weights: ModelWeights, x) -> list[np.ndarray]:
    """Post-ReLU, pre-pool activations of every conv stage."""
    config = weights.config
    out = np.asarray(x, dtype=weights.dtype)
    activations = []
    for i, pool in enumerate(config.pool_sizes):
        z, _ = conv1d_forward(out, weights.arrays[f"conv{i + 1}_w"],
                              weights.arrays[f"conv{i + 1}_b"])
        a = relu(z)
        activations.append(a)
        out, _ = maxpool_forward(a, pool, need_mask=False)
    return activations


def _heads_forward(weights: ModelWeights, feats, train: bool, dropout_rng):
    """All active heads; returns (preds, caches per head)."""
    config = weights.config
    preds = {}
    head_caches = {}
    for head in config.heads:
        layer_count = len(config.head_widths(head))
        caches = []
        a = feats
        for j in range(layer_count):
            w = weights.arrays[f"{head}{j + 1}_w"]
            b = weights.arrays[f"{head}{j + 1}_b"]
            z = dense_forward(a, w, b)
            if j == layer_count - 1:
                caches.append((a, None, None))
                a = z
            else:
                h = relu(z)
                mask = None
                if train and config.dropout > 0.0:
                    if dropout_rng is None:
                        raise InvalidParameterError("training forward needs a dropout rng")
                    mask = dropout_mask(dropout_rng, h.shape, config.dropout, h.dtype)
                    h = h * mask
                caches.append((a, z > 0.0, mask))
                a = h
        preds[head] = a[:, 0] if head == "d" else a
        head_caches[head] = caches
    return preds, head_caches


def forward(weights: ModelWeights, x, train: bool = False, dropout_rng=None) -> dict:
    """Predictions in normalized units: 'd' shaped (B,), 'n'/'k' shaped (B, L)."""
    x = np.asarray(x, dtype=weights.dtype)
    feats, _ = _conv_forward(weights, x, False)
    preds, _ = _heads_forward(weights, feats, train, dropout_rng)
    return preds


def compute_loss(preds: dict, targets: dict, config: NetworkConfig):
    """Weighted sum of per-task mean squared errors; returns (total, parts)."""
    parts = {}
    weight_of = dict(zip(("d", "n", "k"), config.loss_weights))
    total = 0.0
    for head in config.heads:
        if head not in targets:
            raise InvalidParameterError(f"missing target '{head}'")
        diff = preds[head] - targets[head]
        parts[head] = float(np.mean(diff * diff))
        total += weight_of[head] * parts[head]
    parts["total"] = float(total)
    return float(total), parts


def _loss_gradients(preds: dict, targets: dict, config: NetworkConfig):
    """d(total)/d(pred) per head, in compute dtype."""
    weight_of = dict(zip(("d", "n", "k"), config.loss_weights))
    grads = {}
    for head in config.heads:
        diff = preds[head] - targets[head]
        scale = 2.0 * weight_of[head] / diff.size
        grads[head] = (scale * diff).astype(diff.dtype)
    return grads


def _heads_backward(weights: ModelWeights, dpreds: dict, head_caches: dict):
    """Backprop through all heads; returns (dfeats, parameter grads)."""
    config = weights.config
    grads = {}
    dfeats = None
    for head in config.heads:
        caches = head_caches[head]
        last = len(caches) - 1
        da = dpreds[head]
        if head == "d":
            da = da[:, None]
        for j in range(last, -1, -1):
            a_prev, relu_mask, mask = caches[j]
            if j != last:
                if mask is not None:
                    da = da * mask
                # da is freshly allocated by dense_backward (or the dropout
                # multiply), so masking in place is safe.
                da = mask_inplace(da, relu_mask)
            w = weights.arrays[f"{head}{j + 1}_w"]
            da, dw, db = dense_backward(da, a_prev, w)
            grads[f"{head}{j + 1}_w"] = dw
            grads[f"{head}{j + 1}_b"] = db
        dfeats = da if dfeats is None else dfeats + da
    return dfeats, grads


def _conv_backward(weights: ModelWeights, dfeats, conv_caches):
    """Backprop through the conv stack from flattened feature gradients."""
    config = weights.config
    batch = dfeats.shape[0]
    trace = config.conv_trace()
    dp = dfeats.reshape(batch, trace[-1][1], config.conv_channels[-1])
    grads = {}
    for i in range(len(conv_caches) - 1, -1, -1):
        x_shape, col, relu_mask, winner, pool, conv_length = conv_caches[i]
        da = maxpool_backward(dp, winner, pool, conv_length)
        dz = mask_inplace(da, relu_mask)
        w = weights.arrays[f"conv{i + 1}_w"]
        dx, dw, db = conv1d_backward(dz, col, w, x_shape, need_dx=(i > 0))
        grads[f"conv{i + 1}_w"] = dw
        grads[f"conv{i + 1}_b"] = db
        dp = dx
    return grads


def head_loss_and_gradients(weights: ModelWeights, feats, targets: dict,
                            dropout_rng=None, train: bool = True):
    """Loss and head-parameter gradients from precomputed conv features."""
    preds, head_caches = _heads_forward(weights, feats, train, dropout_rng)
    total, parts = compute_loss(preds, targets, weights.config)
    if not math.isfinite(total):
        raise NumericFailureError("loss is not finite")
    dpreds = _loss_gradients(preds, targets, weights.config)
    _, grads = _heads_backward(weights, dpreds, head_caches)
    return total, parts, grads


def loss_and_gradients(weights: ModelWeights, x, targets: dict, dropout_rng=None,
                       train: bool = True, freeze_conv: bool = False):
    """Full forward/backward pass; freeze_conv drops conv gradients entirely."""
    x = np.asarray(x, dtype=weights.dtype)
    if freeze_conv:
        feats, _ = _conv_forward(weights, x, False)
        return head_loss_and_gradients(weights, feats, targets, dropout_rng, train)
    feats, conv_caches = _conv_forward(weights, x, True)
    preds, head_caches = _heads_forward(weights, feats, train, dropout_rng)
    total, parts = compute_loss(preds, targets, weights.config)
    if not math.isfinite(total):
        raise NumericFailureError("loss is not finite")
    dpreds = _loss_gradients(preds, targets, weights.config)
    dfeats, grads = _heads_backward(weights, dpreds, head_caches)
    grads.update(_conv_backward(weights, dfeats, conv_caches))
    return total, parts, grads
