"""Optimality of an agent's configs against the grid-search optimum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import costtable as ct
from ..accel import space as hw
from ..nnspace import encode_indices
from .agent import HwOptAgent

EVALUATORS = ("simulator", "predictor")


def optimality_ratio(optimal, achieved) -> float:
    """``100 * mean(optimal / achieved)``."""
    optimal, achieved = np.asarray(optimal, dtype=float), np.asarray(achieved, dtype=float)
    if optimal.size == 0:
        raise ValueError("empty test set")
    return float(100.0 * np.mean(optimal / achieved))


@dataclass
class OptimalityResult:
    optimality: float
    n_invalid: int
    optimal: np.ndarray
    achieved: np.ndarray
    configs: np.ndarray

    @property
    def invalid_fraction(self) -> float:
        return self.n_invalid / len(self.configs)


def optimality(agent: HwOptAgent, archs: np.ndarray, metric: str | None = None,
               evaluator: str = "simulator", predictor=None, dataset: str = "cifar10") -> OptimalityResult:
    """Evaluate ``hwopt`` on each architecture (choice-index rows).

    ``n_invalid`` counts raw rollouts that needed the template fallback.
    """
    archs = np.atleast_2d(np.asarray(archs, dtype=np.int64))
    if len(archs) == 0:
        raise ValueError("empty test set")
    if evaluator not in EVALUATORS:
        raise ValueError(f"unknown evaluator {evaluator!r}")
    metric = metric or agent.env_cfg.metric
    nn = encode_indices(archs)
    raw = agent.rollout(nn)
    n_invalid = int((~hw.valid_mask(raw)).sum())
    configs = agent.hwopt_batch(nn)
    if evaluator == "simulator":
        table = ct.cost_table(dataset)
        achieved = table.metric(archs, configs, metric)
        optimal = table.optima(archs, metric)[1]
    else:
        if predictor is None:
            raise ValueError("predictor mode needs a predictor")
        grid = hw.encode_onehot_batch(hw.valid_configs())
        achieved = predictor.predict(np.concatenate([nn, hw.encode_onehot_batch(configs)], axis=1))
        optimal = np.array([
            predictor.predict(np.concatenate([np.tile(v, (len(grid), 1)), grid], axis=1)).min() for v in nn
        ])
    return OptimalityResult(optimality_ratio(optimal, achieved), n_invalid, optimal, achieved, configs)
