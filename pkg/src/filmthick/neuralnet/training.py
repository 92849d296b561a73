"""Mini-batch training loop with derived seeding and a frozen-conv fast path.

Per-epoch shuffles and per-step dropout masks come from child streams of one
run seed, so a run is reproducible from (initial weights, data, schedule,
seed) alone.  When the conv stages are frozen, features are computed once and
the dense heads train on them; update sequences match the full pass exactly.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from ..errors import InvalidParameterError, NumericFailureError, TrainingDivergedError
from .adagrad import adagrad_step, reset_accumulators
from .config import TrainSchedule
from .model import (
    ModelWeights,
    conv_features,
    forward,
    head_loss_and_gradients,
    loss_and_gradients,
)


@dataclass
class TrainResult:
    """Trained weights plus per-epoch traces."""

    weights: ModelWeights
    epoch_losses: list = field(default_factory=list)
    epoch_parts: list = field(default_factory=list)
    validation: list = field(default_factory=list)  # (run epoch, total loss) pairs


@contextmanager
def single_thread_mode():
    """Pin BLAS pools to one thread for bit-reproducible linear algebra."""
    with threadpool_limits(limits=1):
        yield


def _cast_batch(inputs, targets, dtype):
    x = np.ascontiguousarray(inputs, dtype=dtype)
    y = {k: np.ascontiguousarray(v, dtype=dtype) for k, v in targets.items()}
    return x, y


def _features_in_chunks(weights, x, chunk=256):
    parts = [conv_features(weights, x[i:i + chunk]) for i in range(0, len(x), chunk)]
    return np.concatenate(parts, axis=0)


def evaluate_loss(weights: ModelWeights, inputs, targets, batch_size: int = 256) -> float:
    """Mean weighted loss over a dataset in eval mode (no dropout)."""
    from .model import compute_loss

    x, y = _cast_batch(inputs, targets, weights.dtype)
    total = 0.0
    for start in range(0, len(x), batch_size):
        idx = slice(start, start + batch_size)
        preds = forward(weights, x[idx], train=False)
        loss, _ = compute_loss(preds, {k: v[idx] for k, v in y.items()}, weights.config)
        total += loss * (min(start + batch_size, len(x)) - start)
    return total / len(x)


def predict(weights: ModelWeights, inputs, batch_size: int = 256) -> dict:
    """Stacked eval-mode predictions in normalized units."""
    x = np.ascontiguousarray(inputs, dtype=weights.dtype)
    chunks = []
    for start in range(0, len(x), batch_size):
        chunks.append(forward(weights, x[start:start + batch_size], train=False))
    return {key: np.concatenate([c[key] for c in chunks], axis=0)
            for key in chunks[0]}


def train(weights: ModelWeights, inputs, targets, schedule: TrainSchedule, seed: int,
          freeze_conv: bool = False, validation: tuple | None = None,
          eval_every: int = 0) -> TrainResult:
    """Optimize in place for `schedule.epochs` epochs; returns traces too.

    `validation`, if given, is an (inputs, targets) pair evaluated every
    `eval_every` epochs and after the final one.
    """
    if len(inputs) == 0:
        raise InvalidParameterError("cannot train on an empty dataset")
    x, y = _cast_batch(inputs, targets, weights.dtype)
    count = len(x)
    result = TrainResult(weights)

    feats = _features_in_chunks(weights, x) if freeze_conv else None
    val_feats = None
    if validation is not None:
        val_x, val_y = _cast_batch(validation[0], validation[1], weights.dtype)
        if freeze_conv:
            val_feats = _features_in_chunks(weights, val_x)

    for epoch in range(1, schedule.epochs + 1):
        if schedule.is_reset_epoch(epoch):
            reset_accumulators(weights)
        if schedule.shuffle:
            order = np.random.default_rng(
                np.random.SeedSequence((seed, epoch))).permutation(count)
        else:
            order = np.arange(count)
        epoch_loss = 0.0
        epoch_parts = {}
        for step, start in enumerate(range(0, count, schedule.batch_size)):
            idx = order[start:start + schedule.batch_size]
            batch_y = {k: v[idx] for k, v in y.items()}
            dropout_rng = np.random.default_rng(np.random.SeedSequence((seed, epoch, step)))
            try:
                if freeze_conv:
                    loss, parts, grads = head_loss_and_gradients(
                        weights, feats[idx], batch_y, dropout_rng)
                else:
                    loss, parts, grads = loss_and_gradients(
                        weights, x[idx], batch_y, dropout_rng)
            except NumericFailureError as exc:
                raise TrainingDivergedError(
                    f"epoch {epoch}, step {step}: {exc}") from exc
            adagrad_step(weights, grads, schedule.learning_rate, schedule.adagrad_epsilon)
            epoch_loss += loss * len(idx)
            for key, value in parts.items():
                epoch_parts[key] = epoch_parts.get(key, 0.0) + value * len(idx)
        weights.epoch += 1
        result.epoch_losses.append(epoch_loss / count)
        result.epoch_parts.append({k: v / count for k, v in epoch_parts.items()})
        if validation is not None and eval_every > 0 and (
                epoch % eval_every == 0 or epoch == schedule.epochs):
            if freeze_conv:
                from .model import compute_loss, _heads_forward
                preds, _ = _heads_forward(weights, val_feats, False, None)
                val_loss, _ = compute_loss(preds, val_y, weights.config)
            else:
                val_loss = evaluate_loss(weights, val_x, val_y)
            result.validation.append((epoch, float(val_loss)))
    return result
