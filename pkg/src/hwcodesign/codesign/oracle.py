"""Synthetic task loss standing in for supernet training loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradcore import Tensor
from ..nnspace import N_CHOICES, Architecture, ArchDistribution, ChoiceId

# kernel-quality bonus; index order follows ChoiceId (C3, C5, C7, CX)
QUALITY = np.zeros(N_CHOICES)
QUALITY[ChoiceId.C3] = 0.0
QUALITY[ChoiceId.CX] = 1 / 3
QUALITY[ChoiceId.C5] = 2 / 3
QUALITY[ChoiceId.C7] = 1.0
DEFAULT_KAPPA = 0.5


@dataclass(frozen=True)
class TaskOracle:
    scores: np.ndarray  # (L, 4) base scores in [0, 1]
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")

    @property
    def n_blocks(self) -> int:
        return len(self.scores)

    @property
    def costs(self) -> np.ndarray:
        """Per-(block, choice) loss contribution ``s - kappa * q``."""
        return self.scores - self.kappa * QUALITY

    def best_architecture(self) -> Architecture:
        return Architecture.from_indices(self.costs.argmin(axis=1))


def make_oracle(n_blocks: int, seed, kappa: float = DEFAULT_KAPPA) -> TaskOracle:
    rng = np.random.default_rng(seed)
    return TaskOracle(rng.random((n_blocks, N_CHOICES)), kappa)


def task_loss(x, oracle: TaskOracle):
    """Expected task loss.

    ``x`` may be an Architecture (float result), an ArchDistribution or an
    ``(L, 4)`` probability array (float), or a probability Tensor
    (differentiable Tensor result).
    """
    if isinstance(x, Architecture):
        idx = x.indices()
        return float(oracle.costs[np.arange(len(idx)), idx].sum())
    if isinstance(x, ArchDistribution):
        x = x.probs
    if isinstance(x, Tensor):
        return (x * oracle.costs).sum()
    return float((np.asarray(x, dtype=float) * oracle.costs).sum())
