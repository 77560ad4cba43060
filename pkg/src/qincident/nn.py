"""Dense-layer building blocks: activations, binary cross-entropy,
Glorot initialization, and Adam.

Everything works on single vectors or on batches stacked along the first
axis.  Batch losses are averaged (not summed), and the final partial batch
of an epoch is used at its natural size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")
BCE_EPS = 1e-7


def _sigmoid(x: np.ndarray) -> np.ndarray:
    flat = np.ravel(x).astype(float)
    out = np.empty_like(flat)
    pos = flat >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-flat[pos]))
    exp = np.exp(flat[~pos])
    out[~pos] = exp / (1.0 + exp)
    return out.reshape(np.shape(x))


def activate(kind: str, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "identity":
        return x
    raise ValueError(f"unknown activation {kind!r}")


def activate_deriv(kind: str, pre_activation) -> np.ndarray:
    """Derivative evaluated at the pre-activation; relu'(0) is defined as 0."""
    z = np.asarray(pre_activation, dtype=float)
    if kind == "relu":
        return np.where(z > 0, 1.0, 0.0)
    if kind == "sigmoid":
        s = _sigmoid(z)
        return s * (1.0 - s)
    if kind == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class DenseLayer:
    """Fully connected layer: weights [out, in], biases [out]."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"inconsistent layer shapes {self.weights.shape} / {self.biases.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


def init_layer(in_dim: int, out_dim: int, seed, activation: str = "relu") -> DenseLayer:
    """Glorot-uniform weights in +/- sqrt(6/(in+out)), zero biases.

    ``seed`` may be an int or an existing Generator (so a model can draw
    all of its layers from one stream).
    """
    if in_dim < 1 or out_dim < 1:
        raise ValueError("layer dimensions must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    limit = np.sqrt(6.0 / (in_dim + out_dim))
    weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
    return DenseLayer(weights, np.zeros(out_dim), activation)


def dense_forward(layer: DenseLayer, x) -> tuple[np.ndarray, np.ndarray]:
    """Returns (pre_activation, output); ``x`` is [in] or [batch, in]."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layer.in_dim:
        raise ValueError(f"expected input width {layer.in_dim}, got {x.shape[-1]}")
    z = x @ layer.weights.T + layer.biases
    return z, activate(layer.activation, z)


def dense_backward(
    layer: DenseLayer, x: np.ndarray, z: np.ndarray, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chain-rule step: returns (d_weights, d_biases, d_input)."""
    dz = d_out * activate_deriv(layer.activation, z)
    if x.ndim == 1:
        d_w = np.outer(dz, x)
        d_b = dz
    else:
        d_w = dz.T @ x
        d_b = dz.sum(axis=0)
    return d_w, d_b, dz @ layer.weights


def bce_loss(prediction, label) -> np.ndarray:
    """Binary cross-entropy with predictions clamped into [eps, 1-eps]."""
    p = np.clip(np.asarray(prediction, dtype=float), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(label, dtype=float)
    return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))


def bce_grad(prediction, label) -> np.ndarray:
    """d loss / d prediction, evaluated at the clamped prediction."""
    p = np.clip(np.asarray(prediction, dtype=float), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(label, dtype=float)
    return (p - y) / (p * (1.0 - p))


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    learning_rate: float = 0.001
    seed: int = 0
    shuffle: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], learning_rate: float = 0.001) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
        )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> list[np.ndarray]:
    """One bias-corrected Adam update; returns the new parameter arrays."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params, grads and state must have matching lengths")
    state.step_count += 1
    mc = 1.0 - state.beta1**state.step_count
    vc = 1.0 - state.beta2**state.step_count
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g
        state.first_moment[i] = m
        state.second_moment[i] = v
        updated.append(p - state.learning_rate * (m / mc) / (np.sqrt(v / vc) + state.epsilon))
    return updated
