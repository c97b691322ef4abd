"""Dense multilayer perceptron: model container, forward pass, loss.

Layer ``l`` (1-based in the docs, 0-based in the lists) maps an input of
width ``input_dim`` to an output of width ``output_dim`` through
``f(W @ a + b)``.  Weight matrices are stored ``(output_dim, input_dim)``.
The softmax output layer is paired with cross-entropy, so the backward pass
starts from the fused delta ``probabilities - target`` instead of chaining
the two derivatives; the fused form is algebraically identical and avoids
dividing by near-zero probabilities.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .effort import EffortLedger
from .numerics import Prng, Vector, matvec

RELU = "relu"
SOFTMAX = "softmax"
IDENTITY = "identity"

_ACTIVATION_IDS = {RELU: 0, SOFTMAX: 1, IDENTITY: 2}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATION_IDS.items()}

LOSS_EPS = 1e-12

CHECKPOINT_MAGIC = b"SPTN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: str

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(
                f"layer dims must be >= 1, got {self.input_dim}x{self.output_dim}"
            )
        if self.activation not in _ACTIVATION_IDS:
            raise ValueError(f"unknown activation {self.activation!r}")


def mlp_layer_specs(widths) -> list[LayerSpec]:
    """Relu-hidden, softmax-output layer chain for a list of layer widths."""
    widths = list(widths)
    if len(widths) < 2:
        raise ValueError("architecture needs at least input and output widths")
    specs = []
    for i in range(len(widths) - 1):
        act = SOFTMAX if i == len(widths) - 2 else RELU
        specs.append(LayerSpec(widths[i], widths[i + 1], act))
    return specs


class MlpModel:
    """Ordered dense layers with their weights and biases.

    The trainer mutates ``weights``/``biases`` in place; everything else
    treats the model as read-only.
    """

    def __init__(self, layers, weights, biases):
        layers = list(layers)
        if not layers:
            raise ValueError("model needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].input_dim != layers[i - 1].output_dim:
                raise ValueError(
                    f"layer {i} input dim {layers[i].input_dim} does not chain "
                    f"with previous output dim {layers[i - 1].output_dim}"
                )
        for i, (spec, W, b) in enumerate(zip(layers, weights, biases)):
            if W.shape != (spec.output_dim, spec.input_dim):
                raise ValueError(f"layer {i} weight shape {W.shape} mismatch")
            if b.shape != (spec.output_dim,):
                raise ValueError(f"layer {i} bias shape {b.shape} mismatch")
            if spec.activation == SOFTMAX and i != len(layers) - 1:
                raise ValueError("softmax is only permitted on the final layer")
        self.layers = layers
        self.weights = list(weights)
        self.biases = list(biases)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def forward_macs_per_sample(self) -> int:
        return sum(s.input_dim * s.output_dim for s in self.layers)

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.layers,
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
        )


@dataclass
class ForwardCache:
    """Activations ``a[0..L]`` (``a[0]`` is the input) and preactivations ``z[1..L]``."""

    activations: list = field(default_factory=list)
    preactivations: list = field(default_factory=list)


def init_model(specs, rng: Prng) -> MlpModel:
    """Gaussian weights scaled by 1/sqrt(fan-in), zero biases."""
    weights = []
    biases = []
    for spec in specs:
        scale = 1.0 / np.sqrt(spec.input_dim)
        W = rng.gaussians(spec.output_dim * spec.input_dim).reshape(
            spec.output_dim, spec.input_dim
        )
        weights.append(W * scale)
        biases.append(np.zeros(spec.output_dim))
    return MlpModel(specs, weights, biases)


def _softmax(z: Vector) -> Vector:
    e = np.exp(z - z.max())
    return e / e.sum()


def _apply_activation(kind: str, z: Vector) -> Vector:
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SOFTMAX:
        return _softmax(z)
    return z.copy()


def forward(model: MlpModel, x: Vector, ledger: EffortLedger | None = None) -> ForwardCache:
    """Run the forward pass, caching every activation and preactivation.

    When a ledger is given, the pass is metered at one MAC per weight,
    ``sum(input_dim * output_dim)`` over the layers.
    """
    if x.shape != (model.input_dim,):
        raise ValueError(
            f"forward: input shape {x.shape} does not match model input dim "
            f"{model.input_dim}"
        )
    cache = ForwardCache(activations=[x])
    a = x
    for spec, W, b in zip(model.layers, model.weights, model.biases):
        z = matvec(W, a) + b
        a = _apply_activation(spec.activation, z)
        cache.preactivations.append(z)
        cache.activations.append(a)
    if ledger is not None:
        ledger.add("forward", model.forward_macs_per_sample)
    return cache


def _require_one_hot(y: Vector) -> int:
    hot = np.flatnonzero(y == 1.0)
    if hot.size != 1 or np.count_nonzero(y) != 1:
        raise ValueError("target must be a one-hot vector")
    return int(hot[0])


def cross_entropy_loss(a_out: Vector, y: Vector) -> float:
    """Cross entropy of a probability vector against a one-hot target."""
    if a_out.shape != y.shape:
        raise ValueError(
            f"cross_entropy_loss: length mismatch, {a_out.shape} vs {y.shape}"
        )
    hot = _require_one_hot(y)
    return float(-np.log(max(a_out[hot], LOSS_EPS)))


def output_delta(a_out: Vector, y: Vector) -> Vector:
    """Loss gradient wrt the output preactivation for softmax + cross entropy."""
    if a_out.shape != y.shape:
        raise ValueError(
            f"output_delta: length mismatch, {a_out.shape} vs {y.shape}"
        )
    return a_out - y


def activation_derivative(kind: str, z: Vector) -> Vector:
    """Derivative of the activation at ``z``; relu'(0) is defined as 0."""
    if kind == RELU:
        return (z > 0.0).astype(np.float64)
    if kind == IDENTITY:
        return np.ones_like(z)
    raise ValueError(
        f"activation_derivative: no standalone derivative for {kind!r}"
    )


def save_checkpoint(model: MlpModel, path) -> None:
    """Write the model in the little-endian SPTN binary layout."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, model.depth))
        for spec, W, b in zip(model.layers, model.weights, model.biases):
            fh.write(
                struct.pack(
                    "<III",
                    spec.input_dim,
                    spec.output_dim,
                    _ACTIVATION_IDS[spec.activation],
                )
            )
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> MlpModel:
    """Read a model written by :func:`save_checkpoint`, bit-exactly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a SPTN checkpoint: bad magic {data[:4]!r}")
    version, depth = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    offset = 12
    specs = []
    weights = []
    biases = []
    for _ in range(depth):
        in_dim, out_dim, act_id = struct.unpack_from("<III", data, offset)
        offset += 12
        if act_id not in _ACTIVATION_NAMES:
            raise ValueError(f"unknown activation id {act_id} in checkpoint")
        specs.append(LayerSpec(in_dim, out_dim, _ACTIVATION_NAMES[act_id]))
        n_w = in_dim * out_dim
        W = np.frombuffer(data, dtype="<f8", count=n_w, offset=offset)
        offset += 8 * n_w
        b = np.frombuffer(data, dtype="<f8", count=out_dim, offset=offset)
        offset += 8 * out_dim
        weights.append(W.reshape(out_dim, in_dim).copy())
        biases.append(b.copy())
    if offset != len(data):
        raise ValueError("checkpoint has trailing bytes")
    return MlpModel(specs, weights, biases)
