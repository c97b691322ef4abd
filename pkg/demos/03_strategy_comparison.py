"""All four backward strategies on the same dataset, accuracy vs effort.

Trains the procedural digit set with dense, fixed top-k, adaptive, and
skip-gated backward passes, then prints the accuracy each reached and the
share of the dense run's backward+update MACs each spent.
"""

from sptn import (
    Prng,
    SparsityConfig,
    TrainConfig,
    effort_ratio,
    effort_ratio_incl_forward,
    split_shuffle,
    synth_digits,
    train,
)

data = synth_digits(3000, Prng(42))
train_set, test_set = split_shuffle(data, 0.2, Prng(43))
print(f"{len(train_set)} train / {len(test_set)} test digit images")

results = {}
for strategy in ("full", "fixed_topk", "tinyprop", "tinypropv2"):
    cfg = TrainConfig(
        epochs=6,
        architecture=(784, 64, 32, 10),
        warmup_epochs=2,
        seed=1,
        sparsity=SparsityConfig(
            strategy=strategy, s_min=0.1, s_max=0.8, zeta=0.9, fixed_ratio=0.25
        ),
    )
    results[strategy] = train(train_set, test_set, cfg)

base = results["full"].ledger
print(f"\n{'strategy':<12}{'accuracy':>9}{'effort':>8}{'incl fwd':>9}{'skipped':>9}")
for strategy, res in results.items():
    print(
        f"{strategy:<12}"
        f"{res.records[-1].test_accuracy:>9.4f}"
        f"{effort_ratio(res.ledger, base):>8.3f}"
        f"{effort_ratio_incl_forward(res.ledger, base):>9.3f}"
        f"{res.ledger.samples_skipped:>9d}"
    )
