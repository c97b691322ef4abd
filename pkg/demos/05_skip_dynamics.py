"""The per-sample skip gate: what it measures and how skipping ramps up.

Trains the skip-gated strategy and reports, per epoch, how many samples
were skipped and what the gate saw.  Early on nearly every sample trains;
as the model gets competent, most samples fall under the threshold and
only the still-wrong ones cost backward MACs.
"""

import numpy as np

from sptn import Prng, SparsityConfig, TrainConfig, split_shuffle, synth_digits, train

data = synth_digits(3000, Prng(21))
train_set, test_set = split_shuffle(data, 0.2, Prng(22))

cfg = TrainConfig(
    epochs=8,
    architecture=(784, 64, 32, 10),
    warmup_epochs=3,
    seed=2,
    sparsity=SparsityConfig(strategy="tinypropv2", s_min=0.1, s_max=0.8, zeta=0.9),
)
result = train(train_set, test_set, cfg, collect_traces=True)

n = len(train_set)
print("epoch  trained  skipped  accuracy")
prev = 0
for rec in result.records:
    skipped_this = rec.samples_skipped - prev
    prev = rec.samples_skipped
    print(f"{rec.epoch:5d}  {n - skipped_this:7d}  {skipped_this:7d}  {rec.test_accuracy:.4f}")

# The gate compares each sample's output error mass against the running max.
alphas = np.array([t.alpha for t in result.traces])
decisions = np.array([t.decision for t in result.traces])
skips = np.array([t.skipped for t in result.traces])
print(f"\ngate factor range: [{alphas.min():.4f}, {alphas.max():.4f}] (bounded by 2)")
print(f"decision range:    [{decisions.min():.4f}, {decisions.max():.4f}]")
print(f"threshold:         {cfg.sparsity.skip_threshold} (strictly above trains)")
print(f"skipped overall:   {int(skips.sum())} of {skips.size}")
