"""Shared test utilities: finite-difference oracles for gradient checks."""

import numpy as np


def central_difference(loss_fn, params, indices, eps=1e-6):
    """Central finite differences of loss_fn at the given flat indices.

    loss_fn takes a flat parameter vector and returns a scalar; params is
    the evaluation point. Returns the FD gradient at those indices.
    """
    out = np.empty(len(indices))
    for row, i in enumerate(indices):
        bumped = params.copy()
        bumped[i] += eps
        up = loss_fn(bumped)
        bumped[i] -= 2 * eps
        down = loss_fn(bumped)
        out[row] = (up - down) / (2 * eps)
    return out


def relative_error(a, b, floor=1e-8):
    """Elementwise |a-b| / max(|a|, |b|, floor)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(floor, np.maximum(np.abs(a), np.abs(b)))


def spread_indices(size, count):
    """Up to `count` indices spread evenly over range(size)."""
    if size <= count:
        return np.arange(size)
    return np.unique(np.linspace(0, size - 1, count).astype(int))


def check_net_gradients(net, loss_fn, analytic, count=40, eps=1e-6):
    """Max relative error between analytic grads and FD over sampled indices.

    loss_fn() recomputes the scalar loss from the net's current parameters;
    analytic is a Gradients for those parameters.
    """
    flat = net.flat_params()
    idx = spread_indices(flat.size, count)

    def at(params):
        net.set_flat_params(params)
        return loss_fn()

    try:
        fd = central_difference(at, flat, idx, eps)
    finally:
        net.set_flat_params(flat)
    return float(relative_error(analytic.flat()[idx], fd).max())
