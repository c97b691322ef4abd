"""Per-sample SGD training loop with warmup + cosine-annealed learning rate.

Training is strictly sequential: every sample is forwarded, the selector
decides what (if anything) to backpropagate, and the update touches only the
active rows.  Batch size is one by construction, since the skip decision of
``tinypropv2`` is made per data point.  Everything is a deterministic
function of (seed, config, dataset).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .effort import EffortLedger
from .network import (
    MlpModel,
    cross_entropy_loss,
    forward,
    init_model,
    mlp_layer_specs,
)
from .numerics import Prng
from .selector import AdaptiveState, SparseGradients, SparsityConfig, backward

DEFAULT_ARCHITECTURE = (784, 128, 64, 32, 10)


@dataclass
class TrainConfig:
    """Training protocol: per-sample SGD, linear warmup, cosine annealing.

    The default peak rate is calibrated for batch-size-1 updates: rates in
    the 0.06+ range reliably blow up a relu MLP once the ramp crosses them
    mid-run (confirmed against an independent implementation), so the
    default stays well inside the stable region.  Minibatch-era protocol
    values can still be set explicitly.
    """

    epochs: int
    architecture: tuple = DEFAULT_ARCHITECTURE
    lr0: float = 0.03
    warmup_epochs: int = 5
    seed: int = 0
    eval_every: int = 1
    sparsity: SparsityConfig = field(default_factory=SparsityConfig)

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError("train.epochs: must be >= 1")
        if self.lr0 <= 0.0:
            raise ValueError("train.lr0: must be > 0")
        if self.warmup_epochs < 0:
            raise ValueError("train.warmup_epochs: must be >= 0")
        if self.warmup_epochs > self.epochs:
            raise ValueError("train.warmup_epochs: must not exceed epochs")
        if self.eval_every < 1:
            raise ValueError("train.eval_every: must be >= 1")
        if self.seed < 0:
            raise ValueError("train.seed: must be >= 0")
        if len(self.architecture) < 2:
            raise ValueError("train.architecture: needs at least two widths")
        self.sparsity.validate()


@dataclass
class RunRecord:
    """One evaluation point; the MAC and skip counters are cumulative."""

    epoch: int
    train_loss_mean: float
    test_accuracy: float
    lr: float
    forward_macs: int
    backward_macs: int
    update_macs: int
    samples_skipped: int


@dataclass
class TrainResult:
    model: MlpModel
    records: list
    ledger: EffortLedger
    traces: list | None = None


def learning_rate(step: int, steps_per_epoch: int, cfg: TrainConfig) -> float:
    """Learning rate for a 0-based sample step.

    Ramps linearly from 0 to ``lr0`` over the warmup epochs, then follows a
    cosine from ``lr0`` down to exactly 0 at the final step.
    """
    if steps_per_epoch < 1:
        raise ValueError("steps_per_epoch must be >= 1")
    total = cfg.epochs * steps_per_epoch
    warm = cfg.warmup_epochs * steps_per_epoch
    if step < warm:
        return cfg.lr0 * step / warm
    span = total - 1 - warm
    if span <= 0:
        return 0.0
    t = min((step - warm) / span, 1.0)
    return cfg.lr0 * 0.5 * (1.0 + math.cos(math.pi * t))


def apply_gradients(
    model: MlpModel, grads: SparseGradients, lr: float, ledger: EffortLedger
) -> None:
    """SGD step on the active rows only; one update MAC per touched entry."""
    for i in range(model.depth):
        rows = grads.active[i]
        W = model.weights[i]
        if rows.size == W.shape[0]:
            W -= lr * grads.weight_grads[i]
            model.biases[i] -= lr * grads.bias_grads[i]
        elif rows.size:
            W[rows] -= lr * grads.weight_grads[i][rows]
            model.biases[i][rows] -= lr * grads.bias_grads[i][rows]
        ledger.add("update", int(rows.size) * (W.shape[1] + 1))


def evaluate(model: MlpModel, test_set: Dataset) -> float:
    """Top-1 accuracy; argmax ties resolve to the lower class index."""
    if test_set.feature_dim != model.input_dim:
        raise ValueError(
            f"evaluate: feature dim {test_set.feature_dim} does not match "
            f"model input {model.input_dim}"
        )
    correct = 0
    for i in range(len(test_set)):
        cache = forward(model, test_set.features[i])
        if int(np.argmax(cache.activations[-1])) == test_set.labels[i]:
            correct += 1
    return correct / len(test_set)


def train(
    train_set: Dataset,
    test_set: Dataset,
    cfg: TrainConfig,
    collect_traces: bool = False,
) -> TrainResult:
    """Train a fresh model; returns the model, eval records, and the ledger.

    Evaluation runs every ``eval_every`` epochs and always after the final
    epoch.  When ``collect_traces`` is set, the per-sample backward traces
    are returned in presentation order for replay-style analysis.
    """
    cfg.validate()
    specs = mlp_layer_specs(cfg.architecture)
    if train_set.feature_dim != specs[0].input_dim:
        raise ValueError(
            f"train: feature dim {train_set.feature_dim} does not match "
            f"architecture input {specs[0].input_dim}"
        )
    if test_set.feature_dim != specs[0].input_dim:
        raise ValueError("train: test set feature dim mismatch")
    if train_set.num_classes != specs[-1].output_dim:
        raise ValueError(
            f"train: {train_set.num_classes} classes vs architecture output "
            f"{specs[-1].output_dim}"
        )

    rng = Prng(cfg.seed)
    model = init_model(specs, rng)
    state = AdaptiveState.for_depth(model.depth)
    ledger = EffortLedger()
    onehots = np.eye(train_set.num_classes)
    records: list[RunRecord] = []
    traces: list | None = [] if collect_traces else None

    n = len(train_set)
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for sample in order:
            x = train_set.features[sample]
            target = onehots[train_set.labels[sample]]
            cache = forward(model, x, ledger)
            loss_sum += cross_entropy_loss(cache.activations[-1], target)
            grads = backward(model, cache, target, cfg.sparsity, state, ledger)
            if not grads.skipped:
                apply_gradients(model, grads, learning_rate(step, n, cfg), ledger)
            if traces is not None:
                traces.append(grads.trace)
            step += 1
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            records.append(
                RunRecord(
                    epoch=epoch,
                    train_loss_mean=loss_sum / n,
                    test_accuracy=evaluate(model, test_set),
                    lr=learning_rate(step - 1, n, cfg),
                    forward_macs=ledger.forward_macs,
                    backward_macs=ledger.backward_macs,
                    update_macs=ledger.update_macs,
                    samples_skipped=ledger.samples_skipped,
                )
            )
    return TrainResult(model=model, records=records, ledger=ledger, traces=traces)
