"""Running statistics and return-based reward scaling."""

from __future__ import annotations

import numpy as np


class RunningMeanStd:
    """Parallel-merge mean/variance accumulator (Chan et al. update)."""

    def __init__(self, epsilon: float = 1e-4):
        self.mean = 0.0
        self.var = 1.0
        self.count = epsilon

    def update(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return
        b_mean, b_var, b_count = float(x.mean()), float(x.var()), x.size
        delta = b_mean - self.mean
        total = self.count + b_count
        self.mean += delta * b_count / total
        m2 = self.var * self.count + b_var * b_count + delta ** 2 * self.count * b_count / total
        self.var = m2 / total
        self.count = total

    def state(self) -> dict:
        return {"mean": self.mean, "var": self.var, "count": self.count}


class RewardNormalizer:
    """Divide rewards by the running std of the discounted return.

    Rewards are only scaled, never shifted, so their sign is preserved.
    """

    def __init__(self, n_envs: int, gamma: float, epsilon: float = 1e-8):
        self.returns = np.zeros(n_envs)
        self.gamma = gamma
        self.epsilon = epsilon
        self.stats = RunningMeanStd()

    def __call__(self, rewards: np.ndarray, dones: np.ndarray) -> np.ndarray:
        self.returns = self.returns * self.gamma + rewards
        self.stats.update(self.returns)
        self.returns[dones] = 0.0
        return self.scale(rewards)

    def scale(self, rewards) -> np.ndarray:
        return np.asarray(rewards, dtype=float) / np.sqrt(self.stats.var + self.epsilon)
