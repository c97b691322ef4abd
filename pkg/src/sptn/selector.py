"""Gradient selection strategies for the backward pass.

Four strategies share one backward implementation and differ only in how
many error components each layer keeps:

* ``full``        -- every component, plain dense backpropagation;
* ``fixed_topk``  -- a fixed fraction per layer, magnitude top-k;
* ``tinyprop``    -- an adaptive fraction per layer, scaled by how large the
                     layer's current total error is relative to the largest
                     total error seen so far in the run, and damped
                     geometrically for earlier layers;
* ``tinypropv2``  -- tinyprop plus a per-sample gate that skips the whole
                     backward pass when the sample's output error is small
                     relative to the largest output error seen so far.

Because all strategies run the same arithmetic over the same masked kernels,
``tinyprop`` with ``s_min = s_max = 1`` and ``zeta = 1`` reproduces ``full``
bit for bit, which the tests rely on.

The backward loop is uniform across layers: the error is propagated through
every weight matrix including the first one (producing the unused
input-layer error), exactly as a fixed per-layer loop on a device would, and
the MAC accounting reflects that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .effort import EffortLedger
from .network import (
    ForwardCache,
    MlpModel,
    activation_derivative,
    output_delta,
)
from .numerics import (
    IndexSet,
    Vector,
    hadamard,
    outer_accumulate_rows,
    sparse_matvec_transposed,
    top_k_indices,
)

STRATEGIES = ("full", "fixed_topk", "tinyprop", "tinypropv2")
SELECT_ON = ("delta_a", "delta_z")


@dataclass
class SparsityConfig:
    """Strategy selection plus every knob the strategies read.

    ``s_min``/``s_max`` bound the fraction of error components a layer may
    propagate, ``zeta`` damps that fraction per layer of distance from the
    output, ``fixed_ratio`` is the constant fraction used by ``fixed_topk``,
    and ``d_min``/``d_max``/``beta``/``skip_threshold`` parameterize the
    per-sample skip decision of ``tinypropv2``.  ``select_on`` picks whether
    magnitude top-k looks at the layer error before (``delta_a``) or after
    (``delta_z``) the activation-derivative mask; the default ``delta_z``
    never spends budget on rows a dead relu would zero anyway.
    """

    strategy: str = "full"
    s_min: float = 0.1
    s_max: float = 0.8
    zeta: float = 0.9
    fixed_ratio: float = 0.5
    d_min: float = 0.0
    d_max: float = 1.0
    beta: float = 1.0
    skip_threshold: float = 0.5
    select_on: str = "delta_z"

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"sparsity.strategy: unknown strategy {self.strategy!r}")
        if not 0.0 <= self.s_min <= 1.0:
            raise ValueError("sparsity.s_min: must be in [0, 1]")
        if not 0.0 <= self.s_max <= 1.0:
            raise ValueError("sparsity.s_max: must be in [0, 1]")
        if self.s_min > self.s_max:
            raise ValueError("sparsity.s_min: must not exceed s_max")
        if not 0.0 < self.zeta <= 1.0:
            raise ValueError("sparsity.zeta: must be in (0, 1]")
        if not 0.0 < self.fixed_ratio <= 1.0:
            raise ValueError("sparsity.fixed_ratio: must be in (0, 1]")
        if self.d_min > self.d_max:
            raise ValueError("sparsity.d_min: must not exceed d_max")
        if self.beta <= 0.0:
            raise ValueError("sparsity.beta: must be > 0")
        if self.select_on not in SELECT_ON:
            raise ValueError(f"sparsity.select_on: unknown mode {self.select_on!r}")


@dataclass
class AdaptiveState:
    """Per-run running maxima the adaptive strategies normalize against.

    ``y_max[i]`` is the largest total error layer ``i+1`` has produced so
    far, updated with the current sample before its propagation rate is
    computed, so the normalized error never exceeds 1.  ``alpha_max`` plays
    the same role for the per-sample output error in the skip decision; it
    is updated for every presented sample, including skipped ones.
    """

    y_max: np.ndarray
    alpha_max: float = 0.0
    samples_seen: int = 0

    @classmethod
    def for_depth(cls, depth: int) -> "AdaptiveState":
        return cls(y_max=np.zeros(depth))


@dataclass
class LayerStats:
    """Per-layer diagnostics for one backward pass (trace-log row material)."""

    total_error: float
    total_error_max: float
    rate: float
    k: int


@dataclass
class BackwardTrace:
    """Replayable record of the decisions taken for one sample.

    ``alpha``/``alpha_max``/``decision`` are NaN for strategies that never
    evaluate the skip gate.  ``layers[i]`` holds layer ``i+1``'s stats, empty
    when the sample was skipped.
    """

    alpha: float
    alpha_max: float
    decision: float
    skipped: bool
    layers: list = field(default_factory=list)


@dataclass
class SparseGradients:
    """Backward-pass output: per-layer gradients plus their active row sets.

    Rows of ``weight_grads[i]`` outside ``active[i]`` are exactly zero, as
    are the corresponding bias-gradient entries.  For a skipped sample all
    gradients are zero and every active set is empty.
    """

    weight_grads: list
    bias_grads: list
    active: list
    skipped: bool
    trace: BackwardTrace


def layer_total_error(delta: Vector) -> float:
    """Sum of absolute error components, the layer's scalar error mass."""
    return float(np.abs(delta).sum())


def propagation_rate(
    total_error: float, layer: int, depth: int, state: AdaptiveState, cfg: SparsityConfig
) -> float:
    """Fraction of layer ``layer``'s error components to propagate.

    Linear in the layer's total error normalized by its running maximum
    (which must already include the current value), scaled between
    ``s_min`` and ``s_max``, then damped by ``zeta`` once per layer of
    distance from the output layer ``depth``.  Clamped to [0, 1].
    """
    y_max = float(state.y_max[layer - 1])
    damping = cfg.zeta ** (depth - layer)
    if y_max <= 0.0:
        rate = cfg.s_min * damping
    else:
        rate = (cfg.s_min + total_error * (cfg.s_max - cfg.s_min) / y_max) * damping
    return min(max(rate, 0.0), 1.0)


def adaptive_k(rate: float, width: int) -> int:
    """Component count for a propagation rate: ceil, floored at one.

    A zero-component layer would sever the backward chain, so at least one
    component is always kept.
    """
    return min(max(math.ceil(rate * width), 1), width)


def decision_metric(alpha: float, state: AdaptiveState, cfg: SparsityConfig) -> float:
    """Skip-gate metric: a sample's training-need factor, normalized.

    ``alpha`` is the sample's output-layer total error; ``state.alpha_max``
    must already include the current value.  Scaled between ``d_min`` and
    ``d_max`` and multiplied by the sensitivity factor ``beta``.
    """
    if state.alpha_max <= 0.0:
        return cfg.d_min * cfg.beta
    return (
        cfg.d_min + alpha * (cfg.d_max - cfg.d_min) / state.alpha_max
    ) * cfg.beta


def should_train(decision: float, cfg: SparsityConfig) -> bool:
    """True when the backward pass should run for this sample.

    Only ``tinypropv2`` ever skips; the comparison is strict, so a decision
    value exactly at the threshold skips.
    """
    if cfg.strategy != "tinypropv2":
        return True
    return decision > cfg.skip_threshold


def _rate_and_k(
    cfg: SparsityConfig,
    total_error: float,
    layer: int,
    depth: int,
    width: int,
    state: AdaptiveState,
) -> tuple[float, int]:
    if cfg.strategy == "full":
        return 1.0, width
    if cfg.strategy == "fixed_topk":
        return cfg.fixed_ratio, adaptive_k(cfg.fixed_ratio, width)
    rate = propagation_rate(total_error, layer, depth, state, cfg)
    return rate, adaptive_k(rate, width)


def _skipped_gradients(model: MlpModel, trace: BackwardTrace) -> SparseGradients:
    return SparseGradients(
        weight_grads=[np.zeros_like(W) for W in model.weights],
        bias_grads=[np.zeros_like(b) for b in model.biases],
        active=[np.zeros(0, dtype=np.int64) for _ in range(model.depth)],
        skipped=True,
        trace=trace,
    )


def backward(
    model: MlpModel,
    cache: ForwardCache,
    y: Vector,
    cfg: SparsityConfig,
    state: AdaptiveState,
    ledger: EffortLedger,
) -> SparseGradients:
    """Sparse backward pass over one sample's forward cache.

    For ``tinypropv2`` the per-sample gate is evaluated first; a skipped
    sample costs zero backward MACs and returns empty active sets.  Otherwise
    each layer, from the output down, keeps the top-k error components for
    its strategy, accumulates weight/bias gradients on those rows only, and
    propagates the masked error to the layer below.  Ledger increments:
    ``k * fan_in`` MACs for the propagation out of a layer and the same again
    for its weight-gradient rows; update MACs are counted when the trainer
    applies the gradients.
    """
    depth = model.depth
    acts = cache.activations
    pres = cache.preactivations
    if len(acts) != depth + 1 or len(pres) != depth:
        raise ValueError("forward cache does not match model depth")
    if acts[-1].shape != y.shape:
        raise ValueError(
            f"target shape {y.shape} does not match output {acts[-1].shape}"
        )
    for i in range(depth):
        if acts[i].shape != (model.layers[i].input_dim,):
            raise ValueError(f"cached activation {i} does not match model dims")

    state.samples_seen += 1
    alpha = alpha_max = decision = float("nan")
    if cfg.strategy == "tinypropv2":
        # Gate factor: the output layer's total error mass.  Bounded by 2
        # for a softmax/one-hot pair, so one badly-mispredicted sample
        # cannot inflate the running maximum far beyond the errors that
        # still carry learning signal, which would silence the gate for
        # the rest of the run.
        alpha = layer_total_error(output_delta(acts[-1], y))
        state.alpha_max = max(state.alpha_max, alpha)
        alpha_max = state.alpha_max
        decision = decision_metric(alpha, state, cfg)
        if not should_train(decision, cfg):
            ledger.count_skipped()
            return _skipped_gradients(
                model, BackwardTrace(alpha, alpha_max, decision, True)
            )

    weight_grads = [np.zeros_like(W) for W in model.weights]
    bias_grads = [np.zeros_like(b) for b in model.biases]
    active: list[IndexSet] = [None] * depth
    stats: list[LayerStats] = [None] * depth

    # Output layer: fused softmax/cross-entropy delta, selected on magnitude.
    delta_z = output_delta(acts[-1], y)
    total_error = layer_total_error(delta_z)
    state.y_max[depth - 1] = max(state.y_max[depth - 1], total_error)
    rate, k = _rate_and_k(cfg, total_error, depth, depth, delta_z.size, state)
    active[depth - 1] = top_k_indices(delta_z, k)
    stats[depth - 1] = LayerStats(total_error, float(state.y_max[depth - 1]), rate, k)

    macs = 0
    for i in range(depth - 1, -1, -1):
        macs += outer_accumulate_rows(weight_grads[i], delta_z, acts[i], active[i])
        sel = active[i]
        bias_grads[i][sel] = delta_z[sel]
        delta_a_below, prop_macs = sparse_matvec_transposed(
            model.weights[i], delta_z, sel
        )
        macs += prop_macs
        if i == 0:
            break
        fprime = activation_derivative(model.layers[i - 1].activation, pres[i - 1])
        delta_z = hadamard(delta_a_below, fprime)
        total_error = layer_total_error(delta_a_below)
        state.y_max[i - 1] = max(state.y_max[i - 1], total_error)
        rate, k = _rate_and_k(cfg, total_error, i, depth, delta_z.size, state)
        target = delta_z if cfg.select_on == "delta_z" else delta_a_below
        active[i - 1] = top_k_indices(target, k)
        stats[i - 1] = LayerStats(total_error, float(state.y_max[i - 1]), rate, k)

    ledger.add("backward", macs)
    ledger.count_trained()
    return SparseGradients(
        weight_grads=weight_grads,
        bias_grads=bias_grads,
        active=active,
        skipped=False,
        trace=BackwardTrace(alpha, alpha_max, decision, False, stats),
    )
