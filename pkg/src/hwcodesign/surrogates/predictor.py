"""MLP performance predictor over joint NN/HW encodings."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..accel.space import ONEHOT_SIZE
from ..gradcore import Adam, MlpModel, RobustScaler, Tensor, checkpoint, l1_loss
from .dataset import PerfDataset
from .metrics import kendall_tau

log = logging.getLogger(__name__)

HIDDEN = (512, 512)


@dataclass
class TrainConfig:
    epochs: int = 80
    lr: float = 1e-3
    decay_epochs: tuple[int, ...] = (40, 60)
    decay_factor: float = 0.1
    batch_size: int = 128
    seed: int = 0


@dataclass
class PerfPredictor:
    model: MlpModel
    scaler: RobustScaler
    metric: str
    nn_size: int
    curve: list = field(default_factory=list)

    @property
    def input_size(self) -> int:
        return self.nn_size + ONEHOT_SIZE

    def __call__(self, x) -> Tensor:
        """Scaled prediction as a differentiable tensor of shape ``(n, 1)``."""
        return self.model(x)

    def predict_scaled(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.model.predict(x.reshape(-1, self.input_size))[:, 0]

    def predict(self, x) -> np.ndarray:
        return self.scaler.inverse_transform(self.predict_scaled(x))

    def save(self, path) -> str:
        return checkpoint.save(path, {"mlp": self.model}, self.scaler,
                               {"kind": "predictor", "metric": self.metric, "nn_size": self.nn_size})

    @classmethod
    def load(cls, path) -> "PerfPredictor":
        models, scaler, meta = checkpoint.load(path)
        if meta.get("kind") != "predictor":
            raise checkpoint.CheckpointError(f"{path} is not a predictor checkpoint")
        return cls(models["mlp"], scaler, meta["metric"], meta["nn_size"])


def train_predictor(data: PerfDataset, metric: str, cfg: TrainConfig | None = None,
                    test: PerfDataset | None = None) -> tuple[PerfPredictor, dict]:
    """Fit on ``data`` (already the training split) with L1 on robust-scaled targets.

    Returns the predictor and a summary holding held-out Kendall tau when
    ``test`` is given.
    """
    cfg = cfg or TrainConfig()
    if len(data) == 0:
        raise ValueError("empty training set")
    x = data.features()
    y_raw = data.target(metric)
    scaler = RobustScaler().fit(y_raw)
    y = scaler.transform(y_raw)[:, None]
    rng = np.random.default_rng(cfg.seed)
    nn_size = data.archs.shape[1] * 4
    model = MlpModel((x.shape[1], *HIDDEN, 1), seed=rng)
    opt = Adam(model.parameters, lr=cfg.lr)
    pred = PerfPredictor(model, scaler, metric, nn_size)
    for epoch in range(cfg.epochs):
        opt.lr = cfg.lr * cfg.decay_factor ** sum(epoch >= e for e in cfg.decay_epochs)
        perm = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            opt.zero_grad()
            loss = l1_loss(model(x[idx]), y[idx])
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        pred.curve.append(total / len(x))
        log.debug("predictor %s epoch %d loss %.5f", metric, epoch, pred.curve[-1])
    summary = {"train_l1": pred.curve[-1] if pred.curve else None}
    if test is not None and len(test) >= 2:
        summary["kendall_tau"] = kendall_tau(pred.predict_scaled(test.features()), test.target(metric))
    return pred, summary
