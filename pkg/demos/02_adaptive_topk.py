"""How the adaptive error-propagation rate turns layer errors into budgets.

Walks the rate computation by hand for one backward pass, then shows the
per-layer selection shrinking as a short training run makes errors smaller
relative to their running maxima.
"""

import numpy as np

from sptn import (
    AdaptiveState,
    EffortLedger,
    Prng,
    SparsityConfig,
    adaptive_k,
    backward,
    forward,
    init_model,
    mlp_layer_specs,
    propagation_rate,
    synth_blobs,
    top_k_indices,
)

# Magnitude top-k on a toy vector: the two largest magnitudes win.
v = np.array([1.0, 2.0, 3.0, -4.0])
print("top-2 of [1, 2, 3, -4]:", top_k_indices(v, 2), "(keeps 3 and -4)")

# The rate is linear in the layer error relative to its running max,
# damped once per layer of distance from the output.
cfg = SparsityConfig(strategy="tinyprop", s_min=0.1, s_max=0.8, zeta=0.9)
state = AdaptiveState(y_max=np.array([5.0, 5.0, 5.0]))
for layer in (3, 2, 1):
    rate = propagation_rate(5.0, layer, 3, state, cfg)
    print(f"layer {layer}/3 at max error: rate={rate:.4f} "
          f"-> k={adaptive_k(rate, 64)} of 64")

# Watch the budgets shrink over a short run.
data = synth_blobs(600, 3, 12, Prng(8))
model = init_model(mlp_layer_specs([12, 32, 16, 3]), Prng(9))
state = AdaptiveState.for_depth(3)
ledger = EffortLedger()
onehots = np.eye(3)
print("\nsample    k per layer   rates")
for step in range(150):
    x = data.features[step]
    y = onehots[data.labels[step]]
    cache = forward(model, x, ledger)
    grads = backward(model, cache, y, cfg, state, ledger)
    for i in range(3):
        W = model.weights[i]
        rows = grads.active[i]
        W[rows] -= 0.05 * grads.weight_grads[i][rows]
        model.biases[i][rows] -= 0.05 * grads.bias_grads[i][rows]
    if step % 30 == 0:
        ks = [st.k for st in grads.trace.layers]
        rates = [round(float(st.rate), 3) for st in grads.trace.layers]
        print(f"{step:6d}    {ks}    {rates}")
print("\nbackward MACs spent:", ledger.backward_macs)
