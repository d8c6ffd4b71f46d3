"""Seeded random search over environment and algorithm hyperparameters."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import envs
from .dqn import DQNConfig, dqn_train
from .evaluate import optimality
from .ppo import PPOConfig, TrainingDivergedError, ppo_train

STEPS_PER_UPDATE = (128, 256, 512, 1024, 2048)


@dataclass
class Trial:
    index: int
    env_cfg: envs.EnvConfig
    lr: float
    gamma: float
    steps_per_update: int
    optimality: float
    n_invalid: int

    def to_json(self) -> dict:
        return {"trial": self.index, "c_inv": self.env_cfg.c_inv, "b": self.env_cfg.b,
                "t_max": self.env_cfg.t_max, "lr": self.lr, "gamma": self.gamma,
                "steps_per_update": self.steps_per_update, "optimality": self.optimality,
                "n_invalid": self.n_invalid}


def sample_trial(rng: np.random.Generator, metric: str) -> tuple[envs.EnvConfig, float, float, int]:
    env_cfg = envs.EnvConfig(c_inv=float(rng.uniform(0.5, 8.0)), b=float(rng.uniform(0.0, 1.0)),
                             t_max=int(rng.integers(1, 9)), metric=metric)
    lr = float(10 ** rng.uniform(-4, -2))
    gamma = float(rng.uniform(0.9, 0.999))
    return env_cfg, lr, gamma, int(rng.choice(STEPS_PER_UPDATE))


def hpo_random_search(setting: str, budget: int, seed, predictor, val_archs: np.ndarray,
                      algo: str = "ppo", trial_steps: int = 20_000, jsonl=None) -> tuple[Trial, list[Trial]]:
    """Return the best trial by validation optimality (simulator) and all trials.

    Diverged trials score 0. Ties keep the earliest trial.
    """
    if budget < 1:
        raise ValueError("trial budget must be >= 1")
    rng = np.random.default_rng(seed)
    trials: list[Trial] = []
    for k in range(budget):
        env_cfg, lr, gamma, spu = sample_trial(rng, predictor.metric)
        train_seed = int(rng.integers(2**31))
        try:
            if algo == "ppo":
                hp = replace(PPOConfig(), lr=lr, gamma=gamma, steps_per_update=spu, total_steps=trial_steps)
                agent, _ = ppo_train(setting, env_cfg, hp, train_seed, predictor)
            else:
                hp = replace(DQNConfig(), lr=lr, gamma=gamma, total_steps=trial_steps,
                             learning_starts=min(DQNConfig.learning_starts, trial_steps // 4))
                agent, _ = dqn_train(setting, env_cfg, hp, train_seed, predictor)
            res = optimality(agent, val_archs)
            score, n_invalid = res.optimality, res.n_invalid
        except TrainingDivergedError:
            score, n_invalid = 0.0, len(val_archs)
        trial = Trial(k, env_cfg, lr, gamma, spu, score, n_invalid)
        trials.append(trial)
        if jsonl is not None:
            jsonl.write(json.dumps(trial.to_json(), sort_keys=True) + "\n")
    best = max(trials, key=lambda t: (t.optimality, -t.index))
    return best, trials
