"""sptn: a dependency-light sparse-backpropagation training engine.

Trains dense multilayer perceptrons with per-sample SGD while metering the
exact multiply-accumulate cost of every phase.  Backward passes can run
dense (``full``), with a fixed top-k fraction per layer (``fixed_topk``),
with an error-adaptive fraction (``tinyprop``), or additionally gated per
sample so well-learned data points skip backpropagation entirely
(``tinypropv2``).
"""

from .data import (
    Dataset,
    IdxFormatError,
    load_mnist_idx,
    split_shuffle,
    synth_blobs,
    synth_digits,
    write_idx_images,
    write_idx_labels,
)
from .effort import EffortLedger, effort_ratio, effort_ratio_incl_forward
from .network import (
    ForwardCache,
    LayerSpec,
    MlpModel,
    activation_derivative,
    cross_entropy_loss,
    forward,
    init_model,
    load_checkpoint,
    mlp_layer_specs,
    output_delta,
    save_checkpoint,
)
from .numerics import (
    Prng,
    hadamard,
    matvec,
    matvec_transposed,
    outer_accumulate_rows,
    sparse_matvec_transposed,
    top_k_indices,
)
from .selector import (
    AdaptiveState,
    BackwardTrace,
    SparseGradients,
    SparsityConfig,
    adaptive_k,
    backward,
    decision_metric,
    layer_total_error,
    propagation_rate,
    should_train,
)
from .trainer import (
    DEFAULT_ARCHITECTURE,
    RunRecord,
    TrainConfig,
    TrainResult,
    apply_gradients,
    evaluate,
    learning_rate,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveState",
    "BackwardTrace",
    "DEFAULT_ARCHITECTURE",
    "Dataset",
    "EffortLedger",
    "ForwardCache",
    "IdxFormatError",
    "LayerSpec",
    "MlpModel",
    "Prng",
    "RunRecord",
    "SparseGradients",
    "SparsityConfig",
    "TrainConfig",
    "TrainResult",
    "activation_derivative",
    "adaptive_k",
    "apply_gradients",
    "backward",
    "cross_entropy_loss",
    "decision_metric",
    "effort_ratio",
    "effort_ratio_incl_forward",
    "evaluate",
    "forward",
    "hadamard",
    "init_model",
    "layer_total_error",
    "learning_rate",
    "load_checkpoint",
    "load_mnist_idx",
    "matvec",
    "matvec_transposed",
    "mlp_layer_specs",
    "outer_accumulate_rows",
    "output_delta",
    "propagation_rate",
    "save_checkpoint",
    "should_train",
    "sparse_matvec_transposed",
    "split_shuffle",
    "synth_blobs",
    "synth_digits",
    "top_k_indices",
    "train",
    "write_idx_images",
    "write_idx_labels",
]
