"""MAC accounting on a net small enough to audit by hand.

A 4 -> 3 -> 2 network backs one sample through each strategy; the printed
counter decompositions can be checked against the formulas directly.
"""

import numpy as np

from sptn import (
    AdaptiveState,
    EffortLedger,
    Prng,
    SparsityConfig,
    backward,
    forward,
    init_model,
    mlp_layer_specs,
)

rng = Prng(3)
model = init_model(mlp_layer_specs([4, 3, 2]), rng)
x = rng.gaussians(4)
y = np.array([1.0, 0.0])

print("dims 4 -> 3 -> 2; per layer, propagating k rows costs k*fan_in MACs")
print("and the weight-gradient rows cost the same again.\n")

for strategy, kw in (
    ("full", {}),
    ("fixed_topk", {"fixed_ratio": 0.5}),
    ("tinyprop", {"s_min": 0.5, "s_max": 0.5, "zeta": 0.5}),
):
    cfg = SparsityConfig(strategy=strategy, **kw)
    ledger = EffortLedger()
    state = AdaptiveState.for_depth(2)
    cache = forward(model, x, ledger)
    grads = backward(model, cache, y, cfg, state, ledger)
    ks = [a.size for a in grads.active]
    expected = 2 * (ks[1] * 3 + ks[0] * 4)
    print(f"{strategy:<12} k={ks}  backward={ledger.backward_macs:3d} "
          f"(= 2*({ks[1]}*3 + {ks[0]}*4) = {expected})  forward={ledger.forward_macs}")

print("\nfull: 2*(2*3 + 3*4) = 36 backward MACs, 4*3 + 3*2 = 18 forward MACs")
