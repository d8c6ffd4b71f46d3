"""MLP classifier approximating the analytical validity rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..accel.space import ONEHOT_SIZE
from ..gradcore import Adam, MlpModel, Tensor, checkpoint, cross_entropy
from ..gradcore.tensor import as_tensor
from .dataset import ValidityDataset

VALID, INVALID = 0, 1
CLASS_WEIGHTS = (0.05, 0.95)  # (valid, invalid)
HIDDEN = (256, 256)


class SingleClassError(ValueError):
    pass


@dataclass
class ValidNet:
    model: MlpModel
    curve: list = field(default_factory=list)

    def logits(self, x) -> Tensor:
        return self.model(x)

    def valid_probability(self, x) -> Tensor:
        """Differentiable P(valid), shape ``(n,)``."""
        x = as_tensor(x)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        return self.model(x).softmax(axis=-1)[:, VALID]

    def predict_proba(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, ONEHOT_SIZE)
        z = self.model.predict(x)
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict_valid(self, x) -> np.ndarray:
        return self.predict_proba(x)[:, VALID] > 0.5

    def save(self, path) -> str:
        return checkpoint.save(path, {"mlp": self.model}, None, {"kind": "validnet"})

    @classmethod
    def load(cls, path) -> "ValidNet":
        models, _, meta = checkpoint.load(path)
        if meta.get("kind") != "validnet":
            raise checkpoint.CheckpointError(f"{path} is not a ValidNet checkpoint")
        return cls(models["mlp"])


def train_validnet(data: ValidityDataset, epochs: int = 150, lr: float = 1e-3, batch_size: int = 128,
                   seed=0, test: ValidityDataset | None = None) -> tuple[ValidNet, dict]:
    if data.valid.all() or not data.valid.any():
        raise SingleClassError("validity dataset must contain both valid and invalid configs")
    x = data.features()
    labels = np.where(data.valid, VALID, INVALID)
    rng = np.random.default_rng(seed)
    net = ValidNet(MlpModel((ONEHOT_SIZE, *HIDDEN, 2), seed=rng))
    opt = Adam(net.model.parameters, lr=lr)
    for _ in range(epochs):
        perm = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), batch_size):
            idx = perm[start:start + batch_size]
            opt.zero_grad()
            loss = cross_entropy(net.model(x[idx]), labels[idx], CLASS_WEIGHTS)
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        net.curve.append(total / len(x))
    summary = {"train_loss": net.curve[-1] if net.curve else None}
    if test is not None and len(test):
        summary["accuracy"] = float((net.predict_valid(test.features()) == test.valid).mean())
    return net, summary
