"""Minimal dense neural networks with hand-rolled backpropagation.

Just enough machinery for the value and policy networks: fully connected
layers with tanh or identity activations, reverse-mode gradients, plain SGD,
Polyak (soft) target updates, and JSON checkpoints. Weights are float64
numpy arrays; forward/backward accept a single input vector or a batch of
rows.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (ArchitectureMismatchError, CorruptCheckpointError,
                     DimensionMismatchError, NonFiniteGradientError)

ACTIVATIONS = ("tanh", "identity")
CHECKPOINT_FORMAT = "densenet-v1"


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.ndim != 1 or self.weight.shape[0] != self.bias.shape[0]:
            raise DimensionMismatchError(
                f"layer shapes disagree: weight {self.weight.shape}, bias {self.bias.shape}")


@dataclass
class DenseNet:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise DimensionMismatchError("a network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise DimensionMismatchError(
                    f"layer widths disagree: {prev.weight.shape} feeds {nxt.weight.shape}")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def architecture(self) -> list[tuple[int, int, str]]:
        return [(l.weight.shape[0], l.weight.shape[1], l.activation) for l in self.layers]


@dataclass(frozen=True)
class SgdConfig:
    """Plain stochastic gradient descent settings."""

    learning_rate: float = 1e-3
    mini_batch_size: int = 32

    def __post_init__(self):
        if self.learning_rate <= 0 or not np.isfinite(self.learning_rate):
            raise ValueError(f"learning_rate must be positive and finite, got {self.learning_rate}")
        if self.mini_batch_size < 1:
            raise ValueError(f"mini_batch_size must be >= 1, got {self.mini_batch_size}")


def make_dense_net(input_dim: int, hidden_sizes, output_dim: int,
                   rng: np.random.Generator, output_activation: str = "identity",
                   bias_scale: float = 1.0) -> DenseNet:
    """A new network with tanh hidden layers.

    Weights start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases start
    uniform in [-bias_scale, bias_scale]. Zero-bias tanh units are odd
    functions of their input, which makes a fresh network insensitive to
    pairwise input interactions; spreading the biases out moves units off
    that symmetric point, so keep bias_scale positive unless a test needs
    exact zeros.
    """
    if input_dim < 1 or output_dim < 1:
        raise DimensionMismatchError(f"bad net dimensions: {input_dim} -> {output_dim}")
    if bias_scale < 0 or not np.isfinite(bias_scale):
        raise ValueError(f"bias_scale must be finite and >= 0, got {bias_scale}")
    sizes = [int(input_dim)] + [int(h) for h in hidden_sizes] + [int(output_dim)]
    layers = []
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        bias = rng.uniform(-bias_scale, bias_scale, size=fan_out) if bias_scale > 0 else np.zeros(fan_out)
        act = "tanh" if i < len(sizes) - 2 else output_activation
        layers.append(Layer(weight, bias, act))
    return DenseNet(layers)


def _apply(activation: str, z: np.ndarray) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(z)
    return z


def _forward_cached(net: DenseNet, x: np.ndarray):
    """Activations of every layer; index 0 is the input itself."""
    outs = [x]
    h = x
    for layer in net.layers:
        z = h @ layer.weight.T + layer.bias
        h = _apply(layer.activation, z)
        outs.append(h)
    return outs


def _check_input(net: DenseNet, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != net.input_dim:
        raise DimensionMismatchError(
            f"input shape {np.shape(x)} does not match net input dim {net.input_dim}")
    return arr, single


def forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the network on one vector or a batch of row vectors."""
    arr, single = _check_input(net, x)
    out = _forward_cached(net, arr)[-1]
    return out[0] if single else out


def backward(net: DenseNet, x, upstream) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Reverse-mode gradients for the scalar L with dL/d(output) = upstream.

    Returns ``(param_grads, input_grad)`` where ``param_grads[i]`` is the
    ``(dW, db)`` pair of layer i. Batched inputs contribute additively: the
    parameter gradients are summed over the batch rows.
    """
    arr, single = _check_input(net, x)
    up = np.asarray(upstream, dtype=float)
    if single:
        up = up[None, :]
    if up.shape != (arr.shape[0], net.output_dim):
        raise DimensionMismatchError(
            f"upstream shape {np.shape(upstream)} does not match net output dim {net.output_dim}")

    outs = _forward_cached(net, arr)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    delta = up
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation == "tanh":
            delta = delta * (1.0 - outs[i + 1] ** 2)
        grads[i] = (delta.T @ outs[i], delta.sum(axis=0))
        delta = delta @ layer.weight
    return grads, (delta[0] if single else delta)


def sgd_step(net: DenseNet, grads, config: SgdConfig) -> DenseNet:
    """One in-place descent step: theta <- theta - lr * grad."""
    if len(grads) != len(net.layers):
        raise DimensionMismatchError(f"got {len(grads)} gradient pairs for {len(net.layers)} layers")
    for layer, (gw, gb) in zip(net.layers, grads):
        if gw.shape != layer.weight.shape or gb.shape != layer.bias.shape:
            raise DimensionMismatchError(
                f"gradient shapes {gw.shape}/{gb.shape} do not match layer "
                f"{layer.weight.shape}/{layer.bias.shape}")
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NonFiniteGradientError("gradient contains NaN or infinity")
    lr = config.learning_rate
    for layer, (gw, gb) in zip(net.layers, grads):
        layer.weight -= lr * gw
        layer.bias -= lr * gb
    return net


def soft_update(target: DenseNet, source: DenseNet, tau: float) -> DenseNet:
    """Polyak averaging, in place: target <- tau * source + (1 - tau) * target."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if target.architecture() != source.architecture():
        raise ArchitectureMismatchError(
            f"cannot blend {source.architecture()} into {target.architecture()}")
    for tl, sl in zip(target.layers, source.layers):
        tl.weight += tau * (sl.weight - tl.weight)
        tl.bias += tau * (sl.bias - tl.bias)
    return target


def clone_net(net: DenseNet) -> DenseNet:
    return DenseNet([Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in net.layers])


def net_to_dict(net: DenseNet) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "layers": [
            {
                "activation": l.activation,
                "weight": l.weight.tolist(),  # row-major nested lists
                "bias": l.bias.tolist(),
            }
            for l in net.layers
        ],
    }


def net_from_dict(data: dict) -> DenseNet:
    try:
        if data["format"] != CHECKPOINT_FORMAT:
            raise CorruptCheckpointError(f"unsupported checkpoint format {data.get('format')!r}")
        layers = [
            Layer(np.array(entry["weight"], dtype=float),
                  np.array(entry["bias"], dtype=float),
                  entry["activation"])
            for entry in data["layers"]
        ]
    except CorruptCheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpointError(f"malformed network checkpoint: {exc}") from exc
    return DenseNet(layers)


def save_weights(net: DenseNet, path: str | os.PathLike) -> None:
    """Write a versioned JSON checkpoint; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net_to_dict(net), fh)


def load_weights(net: DenseNet, path: str | os.PathLike) -> DenseNet:
    """Fill ``net`` in place from a checkpoint written by save_weights.

    The stored architecture must match the receiving network exactly.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    loaded = net_from_dict(data)
    if loaded.architecture() != net.architecture():
        raise ArchitectureMismatchError(
            f"checkpoint holds {loaded.architecture()}, net expects {net.architecture()}")
    for dst, src in zip(net.layers, loaded.layers):
        dst.weight[...] = src.weight
        dst.bias[...] = src.bias
    return net
