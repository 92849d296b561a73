"""Array-level layer primitives with explicit backward passes.

Convolution uses an im2col copy so the heavy lifting is a single matrix
product in both directions; pooling is a reshape plus argmax.  The im2col
buffer is filled with one contiguous slice copy per kernel tap, which is much
cheaper than a generic strided gather at these shapes.  All functions preserve
the dtype of their inputs and keep batch-major channels-last layout
(batch, length, channels).
"""

from __future__ import annotations

import numpy as np


def im2col(x, kernel):
    """Window matrix of x: (B*(L-K+1), C*K), kernel-tap axis last."""
    batch, length, channels = x.shape
    out_length = length - kernel + 1
    col = np.empty((batch, out_length, channels, kernel), dtype=x.dtype)
    for tap in range(kernel):
        col[:, :, :, tap] = x[:, tap:tap + out_length, :]
    return col.reshape(batch * out_length, channels * kernel)


def conv1d_forward(x, w, b):
    """Valid stride-1 convolution.

    x: (B, L, C_in); w: (C_out, C_in, K); b: (C_out,).
    Returns (z, col) where z is (B, L-K+1, C_out) and col is the im2col matrix
    retained for the backward pass.
    """
    batch, length, _ = x.shape
    c_out, c_in, kernel = w.shape
    out_length = length - kernel + 1
    col = im2col(x, kernel)
    z = col @ w.reshape(c_out, c_in * kernel).T
    z = z.reshape(batch, out_length, c_out)
    z += b
    return z, col


def conv1d_backward(dz, col, w, x_shape, need_dx=True):
    """Gradients of conv1d_forward.  dz: (B, L_out, C_out).

    The input gradient is built from one matrix product per kernel tap; each
    product lands contiguously in the corresponding shifted slice of dx,
    avoiding a full column-gradient gather.
    """
    batch, length, c_in = x_shape
    c_out, _, kernel = w.shape
    out_length = length - kernel + 1
    dz_flat = dz.reshape(batch * out_length, c_out)
    dw = (dz_flat.T @ col).reshape(c_out, c_in, kernel)
    db = dz_flat.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dx = np.zeros(x_shape, dtype=dz.dtype)
    for tap in range(kernel):
        contrib = dz_flat @ np.ascontiguousarray(w[:, :, tap])
        dx[:, tap:tap + out_length, :] += contrib.reshape(batch, out_length, c_in)
    return dx, dw, db


def maxpool_forward(x, pool, need_mask=True):
    """Non-overlapping max pooling along length; the tail remainder is dropped.

    Returns (y, winner) with y: (B, L//pool, C) and winner a boolean
    (B, L//pool, pool, C) mask marking the winning in-window position (first
    maximum on ties), or None when not requested.  The mask form keeps the
    backward pass to cheap vectorized multiplies instead of index scatters.
    """
    batch, length, channels = x.shape
    pooled = length // pool
    windows = x[:, :pooled * pool, :].reshape(batch, pooled, pool, channels)
    y = windows.max(axis=2)
    if not need_mask:
        return y, None
    winner = windows == y[:, :, None, :]
    # keep only the first winning slot per window so ties route once
    seen = winner[:, :, 0, :].copy()
    for j in range(1, pool):
        slot = winner[:, :, j, :]
        np.logical_and(slot, np.logical_not(seen), out=slot)
        np.logical_or(seen, slot, out=seen)
    return y, winner


def maxpool_backward(dy, winner, pool, input_length):
    """Route gradients to the winning positions; dy: (B, L//pool, C)."""
    batch, pooled, channels = dy.shape
    windows = winner * dy[:, :, None, :]
    dx = np.zeros((batch, input_length, channels), dtype=dy.dtype)
    dx[:, :pooled * pool, :] = windows.reshape(batch, pooled * pool, channels)
    return dx


def relu(z):
    return np.maximum(z, 0.0)


def relu_backward(da, z):
    """da masked by the forward pre-activation sign (gradient 0 at z == 0)."""
    return np.where(z > 0.0, da, 0.0)


def mask_inplace(da, active):
    """Zero da wherever `active` is False; returns da.

    An in-place multiply by the boolean mask is an order of magnitude faster
    than masked copyto at these sizes.
    """
    np.multiply(da, active, out=da)
    return da


def dense_forward(x, w, b):
    """x: (B, fan_in); w: (fan_in, fan_out); b: (fan_out,)."""
    return x @ w + b


def dense_backward(dy, x, w):
    """Returns (dx, dw, db) for dense_forward."""
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def dropout_mask(rng, shape, rate, dtype):
    """Inverted-dropout mask: zeros with probability `rate`, else 1/(1-rate).

    Draws come from `rng` in float64 regardless of compute dtype, so masks are
    identical between float32 and float64 runs of the same seed.
    """
    keep = rng.random(shape) >= rate
    return keep.astype(dtype) / np.asarray(1.0 - rate, dtype=dtype)
