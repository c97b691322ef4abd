"""Shared oracle helpers for the test suite.

The finite-difference gradient oracle here is deliberately independent of
the package's backward pass: it only ever calls the forward pass and the
loss, perturbing one parameter at a time.
"""

import numpy as np

from sptn import cross_entropy_loss, forward


def network_loss(model, x, y) -> float:
    cache = forward(model, x)
    return cross_entropy_loss(cache.activations[-1], y)


def finite_difference_grads(model, x, y, step=1e-5):
    """Central-difference gradients of the loss wrt every weight and bias."""
    weight_grads = []
    bias_grads = []
    for W in model.weights:
        G = np.zeros_like(W)
        for i in range(W.shape[0]):
            for j in range(W.shape[1]):
                orig = W[i, j]
                W[i, j] = orig + step
                up = network_loss(model, x, y)
                W[i, j] = orig - step
                down = network_loss(model, x, y)
                W[i, j] = orig
                G[i, j] = (up - down) / (2.0 * step)
        weight_grads.append(G)
    for b in model.biases:
        g = np.zeros_like(b)
        for i in range(b.shape[0]):
            orig = b[i]
            b[i] = orig + step
            up = network_loss(model, x, y)
            b[i] = orig - step
            down = network_loss(model, x, y)
            b[i] = orig
            g[i] = (up - down) / (2.0 * step)
        bias_grads.append(g)
    return weight_grads, bias_grads


def max_relative_error(analytic, numeric, atol=1e-10) -> float:
    """Largest elementwise relative error, ignoring entries tiny on both sides."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a = np.asarray(a, dtype=np.float64)
        n = np.asarray(n, dtype=np.float64)
        scale = np.maximum(np.abs(a), np.abs(n))
        mask = scale > atol
        if mask.any():
            rel = np.abs(a - n)[mask] / scale[mask]
            worst = max(worst, float(rel.max()))
    return worst
