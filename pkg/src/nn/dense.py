"""
Dense feed-forward networks with analytic backprop.

Weights use the (fan_in, fan_out) layout so a batch `x` of shape (B, fan_in)
maps to `x @ W + b`. All arithmetic is float64.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ShapeError
from src.utils.math_utils import sigmoid

ACTIVATIONS = ("identity", "sigmoid")


@dataclass
class ForwardCache:
    """Activations recorded by one forward pass"""
    owner: int
    version: int
    inputs: List[np.ndarray] = field(default_factory=list)
    preacts: List[np.ndarray] = field(default_factory=list)
    output: Optional[np.ndarray] = None
    squeeze: bool = False


class DenseNet:
    """
    Multi-layer perceptron: ReLU hidden layers and an identity or sigmoid head.

    Args:
        widths: layer widths including input and output, e.g. (3, 64, 64, 1)
        output_activation: "identity" or "sigmoid"
        rng: generator for the initial weights
    """

    def __init__(self, widths: Sequence[int], output_activation: str = "identity",
                 rng: Optional[np.random.Generator] = None):
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ShapeError(f"invalid layer widths {list(widths)}")
        if output_activation not in ACTIVATIONS:
            raise ShapeError(f"unknown output activation {output_activation!r}")
        self.widths = tuple(int(w) for w in widths)
        self.output_activation = output_activation
        self.version = 0

        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    # ========== Parameters ==========

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in layer order: W1, b1, W2, b2, ..."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params

    def num_parameters(self) -> int:
        return sum(a * b + b for a, b in zip(self.widths[:-1], self.widths[1:]))

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        if len(params) != 2 * self.num_layers:
            raise ShapeError(f"expected {2 * self.num_layers} arrays, got {len(params)}")
        for i in range(self.num_layers):
            w, b = np.asarray(params[2 * i], dtype=np.float64), np.asarray(params[2 * i + 1], dtype=np.float64)
            if w.shape != self.weights[i].shape or b.shape != self.biases[i].shape:
                raise ShapeError(f"layer {i}: shape mismatch")
            self.weights[i] = w.copy()
            self.biases[i] = b.copy()
        self.touch()

    def touch(self) -> None:
        """Mark parameters as changed; outstanding forward caches become stale"""
        self.version += 1

    def same_architecture(self, other: "DenseNet") -> bool:
        return self.widths == other.widths and self.output_activation == other.output_activation

    def copy(self) -> "DenseNet":
        other = DenseNet(self.widths, self.output_activation)
        other.set_parameters(self.parameters())
        return other

    # ========== Forward / backward ==========

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        """
        Evaluate the network on one input vector or a batch.

        Returns:
            (output, cache) where output has shape (B, out) or (out,) for a vector
        """
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise ShapeError(f"input shape {x.shape} does not match width {self.widths[0]}")

        cache = ForwardCache(owner=id(self), version=self.version, squeeze=squeeze)
        a = x
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache.inputs.append(a)
            z = a @ w + b
            cache.preacts.append(z)
            if i < self.num_layers - 1:
                a = np.maximum(z, 0.0)
            elif self.output_activation == "sigmoid":
                a = sigmoid(z)
            else:
                a = z
        cache.output = a
        return (a[0] if squeeze else a), cache

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache: ForwardCache, grad_output: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
        """
        Reverse-mode gradients for a recorded forward pass.

        Args:
            cache: cache returned by `forward` on this network, before any update
            grad_output: dL/d(output), same shape as the forward output

        Returns:
            (parameter gradients in `parameters()` order, dL/d(input))
        """
        if cache.owner != id(self) or cache.version != self.version:
            raise ShapeError("stale forward cache: parameters changed since the forward pass")
        grad = np.asarray(grad_output, dtype=np.float64)
        if cache.squeeze:
            grad = grad[None, :]
        if grad.shape != cache.output.shape:
            raise ShapeError(f"output gradient shape {grad.shape} != output shape {cache.output.shape}")

        if self.output_activation == "sigmoid":
            grad = grad * cache.output * (1.0 - cache.output)

        grads: List[np.ndarray] = [np.empty(0)] * (2 * self.num_layers)
        for i in reversed(range(self.num_layers)):
            if i < self.num_layers - 1:
                grad = grad * (cache.preacts[i] > 0.0)
            grads[2 * i] = cache.inputs[i].T @ grad
            grads[2 * i + 1] = grad.sum(axis=0)
            grad = grad @ self.weights[i].T

        return grads, (grad[0] if cache.squeeze else grad)

    # ========== Snapshot ==========

    def to_snapshot(self) -> Dict[str, Any]:
        """Layer-order flat arrays with a shape header"""
        params = self.parameters()
        return {
            "widths": list(self.widths),
            "output_activation": self.output_activation,
            "shapes": [list(p.shape) for p in params],
            "values": [p.ravel().tolist() for p in params],
        }

    @classmethod
    def from_snapshot(cls, snapshot: Dict[str, Any]) -> "DenseNet":
        net = cls(snapshot["widths"], snapshot["output_activation"])
        params = [
            np.asarray(values, dtype=np.float64).reshape(shape)
            for shape, values in zip(snapshot["shapes"], snapshot["values"])
        ]
        net.set_parameters(params)
        return net


def soft_update(target: DenseNet, source: DenseNet, tau: float) -> None:
    """Polyak averaging: target <- tau * source + (1 - tau) * target"""
    if not target.same_architecture(source):
        raise ShapeError(f"architecture mismatch: {target.widths} vs {source.widths}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    for t_param, s_param in zip(target.parameters(), source.parameters()):
        t_param *= 1.0 - tau
        t_param += tau * s_param
    target.touch()
