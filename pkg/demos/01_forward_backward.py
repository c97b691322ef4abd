"""Forward pass, dense backward pass, and a finite-difference spot check.

Builds a small relu/softmax network, runs one sample through it, and shows
that the analytic gradients agree with central differences.
"""

import numpy as np

from sptn import (
    AdaptiveState,
    EffortLedger,
    Prng,
    SparsityConfig,
    backward,
    cross_entropy_loss,
    forward,
    init_model,
    mlp_layer_specs,
)

rng = Prng(5)
specs = mlp_layer_specs([8, 6, 4])
model = init_model(specs, rng)
x = rng.gaussians(8)
y = np.zeros(4)
y[2] = 1.0

ledger = EffortLedger()
cache = forward(model, x, ledger)
print("activations per layer:", [a.shape[0] for a in cache.activations])
print("output distribution:  ", np.round(cache.activations[-1], 4))
print("loss:                 ", round(cross_entropy_loss(cache.activations[-1], y), 4))
print("forward MACs:         ", ledger.forward_macs, "(= 8*6 + 6*4)")

state = AdaptiveState.for_depth(model.depth)
grads = backward(model, cache, y, SparsityConfig(strategy="full"), state, ledger)
print("backward MACs:        ", ledger.backward_macs)

# Central-difference check on one output-layer weight entry.
i, j = 2, 1
step = 1e-6
W = model.weights[-1]
orig = W[i, j]
W[i, j] = orig + step
up = cross_entropy_loss(forward(model, x).activations[-1], y)
W[i, j] = orig - step
down = cross_entropy_loss(forward(model, x).activations[-1], y)
W[i, j] = orig
numeric = (up - down) / (2 * step)
analytic = grads.weight_grads[-1][i, j]
print(f"dL/dW[-1][{i},{j}]: analytic {analytic:.8f}  numeric {numeric:.8f}")
