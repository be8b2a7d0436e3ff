"""Minimal fully connected feed-forward network with analytic backprop and Adam.

Weights are stored as (fan_in, fan_out) matrices so a batch X of shape (n, d)
flows through as X @ W + b. No output activation is applied; the heads consume
the raw output vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _relu(p):
    return np.maximum(p, 0.0)


def _relu_deriv(p):
    return (p > 0.0).astype(np.float64)


def _tanh(p):
    return np.tanh(p)


def _tanh_deriv(p):
    t = np.tanh(p)
    return 1.0 - t * t


_ACTIVATIONS = {"relu": (_relu, _relu_deriv), "tanh": (_tanh, _tanh_deriv)}


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_layers: tuple
    output_dim: int
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError("hidden layer widths must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def layer_dims(self) -> list:
        return [self.input_dim, *self.hidden_layers, self.output_dim]


@dataclass
class NetworkParams:
    weights: list
    biases: list
    activation: str = "relu"

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


def init_params(config: NetworkConfig) -> NetworkParams:
    """Uniform fan-in initialization: W ~ U(-1/sqrt(fan_in), +), biases zero."""
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights, biases, config.activation)


def forward(params: NetworkParams, x):
    """Forward pass for a single covariate vector (d,) or a batch (n, d).

    Returns (outputs, cache); the cache holds the layer inputs and
    pre-activations needed by backward().
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x.reshape(1, -1) if single else x
    if a.shape[1] != params.input_dim:
        raise ValueError(
            f"covariate dimension {a.shape[1]} does not match network input "
            f"dimension {params.input_dim}"
        )
    act, _ = _ACTIVATIONS[params.activation]
    inputs = [a]
    preacts = []
    n_layers = len(params.weights)
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        p = a @ w + b
        preacts.append(p)
        a = act(p) if layer < n_layers - 1 else p
        if layer < n_layers - 1:
            inputs.append(a)
    cache = {"inputs": inputs, "preacts": preacts, "single": single}
    return (a[0] if single else a), cache


@dataclass
class NetworkGradients:
    weights: list
    biases: list


def backward(params: NetworkParams, cache, grad_outputs) -> NetworkGradients:
    """Reverse-mode gradients of a scalar loss given d(loss)/d(outputs).

    grad_outputs must match the shape of the forward outputs; batched rows are
    accumulated (the caller owns any 1/n scaling).
    """
    g = np.asarray(grad_outputs, dtype=np.float64)
    if cache["single"]:
        g = g.reshape(1, -1)
    inputs, preacts = cache["inputs"], cache["preacts"]
    if len(inputs) != len(params.weights) or g.shape != (
        inputs[0].shape[0],
        params.output_dim,
    ):
        raise ValueError("cache/gradient shapes do not match these parameters")
    _, deriv = _ACTIVATIONS[params.activation]
    grad_w = [None] * len(params.weights)
    grad_b = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        grad_w[layer] = inputs[layer].T @ g
        grad_b[layer] = g.sum(axis=0)
        if layer > 0:
            g = (g @ params.weights[layer].T) * deriv(preacts[layer - 1])
    return NetworkGradients(grad_w, grad_b)


@dataclass
class OptimizerState:
    """Adam accumulator state; shapes mirror the parameters it updates."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    m_weights: list = field(default_factory=list)
    v_weights: list = field(default_factory=list)
    m_biases: list = field(default_factory=list)
    v_biases: list = field(default_factory=list)


def init_optimizer(params: NetworkParams, learning_rate: float) -> OptimizerState:
    if not learning_rate >= 0.0:
        raise ValueError(f"learning rate must be >= 0, got {learning_rate}")
    return OptimizerState(
        learning_rate=float(learning_rate),
        m_weights=[np.zeros_like(w) for w in params.weights],
        v_weights=[np.zeros_like(w) for w in params.weights],
        m_biases=[np.zeros_like(b) for b in params.biases],
        v_biases=[np.zeros_like(b) for b in params.biases],
    )


def optimizer_step(
    params: NetworkParams, grads: NetworkGradients, state: OptimizerState
) -> None:
    """One bias-corrected Adam update, in place."""
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient at optimizer step {state.step_count + 1}"
            )
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    mc = 1.0 - b1**t
    vc = 1.0 - b2**t
    packs = (
        (params.weights, grads.weights, state.m_weights, state.v_weights),
        (params.biases, grads.biases, state.m_biases, state.v_biases),
    )
    for values, gs, ms, vs in packs:
        for value, g, m, v in zip(values, gs, ms, vs):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            value -= state.learning_rate * (m / mc) / (np.sqrt(v / vc) + state.epsilon)
