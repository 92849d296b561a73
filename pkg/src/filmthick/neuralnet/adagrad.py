"""Adaptive-gradient optimizer with scheduled accumulator resets.

Update per parameter: acc += g^2; theta -= lr * g / (sqrt(acc) + eps).  The
accumulator makes effective step sizes shrink over time; resetting it at
scheduled epochs restores early-training step sizes without touching weights.
"""

from __future__ import annotations

import numpy as np

from .model import ModelWeights


def adagrad_step(weights: ModelWeights, grads: dict, learning_rate: float,
                 epsilon: float) -> None:
    """Apply one in-place update to every parameter present in `grads`."""
    for name, grad in grads.items():
        acc = weights.accumulators[name]
        acc += grad * grad
        weights.arrays[name] -= learning_rate * grad / (np.sqrt(acc) + epsilon)


def reset_accumulators(weights: ModelWeights, names=None) -> None:
    """Zero optimizer accumulators (all of them, or a named subset)."""
    for name in (names if names is not None else weights.accumulators):
        weights.accumulators[name][...] = 0.0
