"""MLPs and losses on top of :mod:`gradcore.tensor`."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import Tensor, as_tensor, parameter


class MlpModel:
    """Fully connected ReLU network with a linear output layer.

    ``widths`` lists every layer width including input and output, e.g.
    ``(72, 512, 512, 1)``.
    """

    def __init__(self, widths: Sequence[int], seed=0):
        if len(widths) < 2:
            raise ValueError("an MLP needs at least an input and an output width")
        self.widths = tuple(int(w) for w in widths)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            limit = np.sqrt(6.0 / fan_in)  # He-uniform
            self.weights.append(parameter(rng.uniform(-limit, limit, size=(fan_in, fan_out))))
            self.biases.append(parameter(np.zeros(fan_out)))

    @property
    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    @property
    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters)

    def __call__(self, x) -> Tensor:
        h = as_tensor(x)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = h.relu()
        return h

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Graph-free forward pass."""
        h = np.asarray(x, dtype=float)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if k < last:
                np.maximum(h, 0.0, out=h)
        return h

    def zero_grad(self):
        for p in self.parameters:
            p.grad = None

    def state(self) -> dict:
        return {
            "widths": list(self.widths),
            "weights": [w.data.tolist() for w in self.weights],
            "biases": [b.data.tolist() for b in self.biases],
        }

    @classmethod
    def from_state(cls, state: dict) -> "MlpModel":
        model = cls(state["widths"])
        for p, arr in zip(model.weights, state["weights"]):
            p.data = np.array(arr, dtype=float)
        for p, arr in zip(model.biases, state["biases"]):
            p.data = np.array(arr, dtype=float)
        return model

    def copy(self) -> "MlpModel":
        return MlpModel.from_state({"widths": self.widths,
                                    "weights": [w.data for w in self.weights],
                                    "biases": [b.data for b in self.biases]})

    def load_from(self, other: "MlpModel"):
        for p, q in zip(self.parameters, other.parameters):
            p.data = q.data.copy()


def l1_loss(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"l1_loss shape mismatch: {pred.shape} vs {target.shape}")
    return (pred - target).abs().mean()


def mse_loss(pred, target) -> Tensor:
    diff = as_tensor(pred) - as_tensor(target)
    return (diff * diff).mean()


def cross_entropy(logits, labels, class_weights=None) -> Tensor:
    """Mean over the batch of ``-w[label] * log_softmax(logits)[label]``."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n_classes = logits.shape[-1]
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"label outside [0, {n_classes})")
    logp = logits.reshape(-1, n_classes).log_softmax(axis=-1)
    picked = logp.take_along(labels[:, None], axis=1).reshape(-1)
    if class_weights is not None:
        w = np.asarray(class_weights, dtype=float)
        if (w <= 0).any():
            raise ValueError("class weights must be positive")
        picked = picked * w[labels]
    return -picked.mean()
