"""MLP hardware generators: supervised on grid-search optima, or trained
through the predictor and ValidNet."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import costtable as ct
from ..accel import space as hw
from ..gradcore import Adam, MlpModel, Tensor, checkpoint, concat
from ..nnspace import encode_indices
from ..rlopt.agent import greedy_actions, head_slices
from ..rlopt.envs import COMPOSITE, LOWS
from ..rlopt.evaluate import optimality_ratio

HIDDEN = (512, 512)
LAMBDA_SWEEP = tuple(10.0 ** x for x in range(-4, 3))


@dataclass
class HwGenerator:
    model: MlpModel
    kind: str
    curve: list = field(default_factory=list)

    def head_probs(self, nn) -> Tensor:
        """Row-wise softmax per parameter head, concatenated to width 36."""
        logits = self.model(nn)
        return concat([logits[:, s].softmax(axis=-1) for s in head_slices()], axis=1)

    def generate(self, nn) -> np.ndarray:
        nn = np.atleast_2d(np.asarray(nn, dtype=float))
        return LOWS + greedy_actions(COMPOSITE, self.model.predict(nn))

    def save(self, path) -> str:
        return checkpoint.save(path, {"mlp": self.model}, None, {"kind": "hwgen", "generator": self.kind})

    @classmethod
    def load(cls, path) -> "HwGenerator":
        models, _, meta = checkpoint.load(path)
        if meta.get("kind") != "hwgen":
            raise checkpoint.CheckpointError(f"{path} is not a generator checkpoint")
        return cls(models["mlp"], meta["generator"])


def _new_model(nn_size: int, rng) -> MlpModel:
    return MlpModel((nn_size, *HIDDEN, hw.ONEHOT_SIZE), seed=rng)


def optimal_labels(archs: np.ndarray, metric: str = "cycles", dataset: str = "cifar10") -> np.ndarray:
    """Grid-search optimal config per architecture, ``(n, 7)``."""
    table = ct.cost_table(dataset)
    rows, _ = table.optima(archs, metric)
    return table.configs[rows]


def _minibatches(n: int, batch_size: int, rng):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start:start + batch_size]


def exhaustive_hwgen_train(archs: np.ndarray, metric: str = "cycles", epochs: int = 60, lr: float = 1e-3,
                           batch_size: int = 128, seed=0, dataset: str = "cifar10") -> HwGenerator:
    """Cross-entropy per head against the exhaustive-search optimum."""
    x = encode_indices(archs)
    targets = optimal_labels(archs, metric, dataset) - LOWS
    rng = np.random.default_rng(seed)
    gen = HwGenerator(_new_model(x.shape[1], rng), "exhaustive")
    opt = Adam(gen.model.parameters, lr=lr)
    for _ in range(epochs):
        total = 0.0
        for idx in _minibatches(len(x), batch_size, rng):
            logits = gen.model(x[idx])
            nll = [logits[:, s].log_softmax(axis=-1).take_along(targets[idx, h:h + 1], axis=-1)
                   for h, s in enumerate(head_slices())]
            loss = concat(nll, axis=1).sum(axis=1).mean() * -1.0
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        gen.curve.append(total / len(x))
    return gen


def perf_hwgen_train(archs: np.ndarray, predictor, validnet, lam: float, epochs: int = 60, lr: float = 1e-3,
                     batch_size: int = 128, seed=0) -> HwGenerator:
    """Minimise predicted cost plus ``lam`` times the ValidNet L1 validity loss."""
    x = encode_indices(archs)
    rng = np.random.default_rng(seed)
    gen = HwGenerator(_new_model(x.shape[1], rng), "perf")
    opt = Adam(gen.model.parameters, lr=lr)
    for _ in range(epochs):
        total = 0.0
        for idx in _minibatches(len(x), batch_size, rng):
            hw_probs = gen.head_probs(x[idx])
            l_hw = predictor(concat([Tensor(x[idx]), hw_probs], axis=1)).mean()
            l_valid = (validnet.valid_probability(hw_probs) - 1.0).abs().mean()
            loss = l_hw + l_valid * lam
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        gen.curve.append(total / len(x))
    return gen


@dataclass
class GeneratorScore:
    optimality: float  # over valid outputs only; NaN when none are valid
    invalid_fraction: float
    n: int


def score_generator(gen: HwGenerator, archs: np.ndarray, metric: str = "cycles",
                    dataset: str = "cifar10") -> GeneratorScore:
    configs = gen.generate(encode_indices(archs))
    valid = hw.valid_mask(configs)
    opt = float("nan")
    if valid.any():
        table = ct.cost_table(dataset)
        achieved = table.metric(archs[valid], configs[valid], metric)
        optimal = table.optima(archs[valid], metric)[1]
        opt = optimality_ratio(optimal, achieved)
    return GeneratorScore(opt, float(1.0 - valid.mean()), len(archs))
