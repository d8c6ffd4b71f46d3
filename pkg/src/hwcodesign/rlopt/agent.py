"""Frozen HW optimizer agent: greedy rollout with template fallback."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..accel import space as hw
from ..gradcore import MlpModel, checkpoint
from . import envs

HIDDEN = (64, 64)


def n_outputs(setting: str) -> int:
    envs.check_setting(setting)
    return hw.ONEHOT_SIZE if setting == envs.COMPOSITE else envs.SEQ_ACTIONS


def head_slices() -> list[slice]:
    return [slice(o, o + s) for o, s in zip(hw.PARAM_OFFSETS, hw.PARAM_SIZES)]


def greedy_actions(setting: str, scores: np.ndarray) -> np.ndarray:
    """Argmax per factored head (composite) or over the single head."""
    if setting == envs.COMPOSITE:
        return np.stack([scores[:, s].argmax(axis=1) for s in head_slices()], axis=1)
    return scores.argmax(axis=1)


@dataclass
class HwOptAgent:
    setting: str
    policy: MlpModel
    env_cfg: envs.EnvConfig
    nn_size: int
    algo: str = "ppo"
    h0: hw.HwConfig = hw.DEFAULT_CONFIG
    meta: dict = field(default_factory=dict)

    def scores(self, obs: np.ndarray) -> np.ndarray:
        return self.policy.predict(obs)

    def rollout(self, nn, h0=None) -> np.ndarray:
        """Raw greedy rollout, ``(n, 7)`` configs that may be invalid."""
        nn = np.atleast_2d(np.asarray(nn, dtype=float))
        if nn.shape[1] != self.nn_size:
            raise ValueError(f"nn vector has width {nn.shape[1]}, agent expects {self.nn_size}")
        h0 = self.h0 if h0 is None else h0
        n = len(nn)
        state = envs.EnvState(nn, np.tile(np.asarray(h0, dtype=np.int64), (n, 1)),
                              np.zeros(n, dtype=np.int64), np.zeros(n))
        for _ in range(envs.episode_length(self.setting, self.env_cfg)):
            actions = greedy_actions(self.setting, self.scores(envs.observe(self.setting, state)))
            config = envs.action_to_config(self.setting, state, actions)
            state = envs.EnvState(nn, config, state.step + 1, state.perf_prev)
        return state.config

    def hwopt_batch(self, nn, h0=None) -> np.ndarray:
        h0 = self.h0 if h0 is None else h0
        configs = self.rollout(nn, h0)
        bad = ~hw.valid_mask(configs)
        configs[bad] = np.asarray(h0, dtype=np.int64)
        return configs

    def save(self, path) -> str:
        meta = {"kind": "hwopt-agent", "setting": self.setting, "algo": self.algo,
                "nn_size": self.nn_size, "h0": list(self.h0),
                "env": {"c_inv": self.env_cfg.c_inv, "b": self.env_cfg.b,
                        "t_max": self.env_cfg.t_max, "metric": self.env_cfg.metric},
                **self.meta}
        return checkpoint.save(path, {"policy": self.policy}, None, meta)

    @classmethod
    def load(cls, path) -> "HwOptAgent":
        models, _, meta = checkpoint.load(path)
        if meta.get("kind") != "hwopt-agent":
            raise checkpoint.CheckpointError(f"{path} is not an agent checkpoint")
        extra = {k: v for k, v in meta.items()
                 if k not in ("kind", "setting", "algo", "nn_size", "h0", "env")}
        return cls(meta["setting"], models["policy"], envs.EnvConfig(**meta["env"]),
                   meta["nn_size"], meta["algo"], hw.HwConfig(*meta["h0"]), extra)


def hwopt(agent: HwOptAgent, nn_vector, h0=hw.DEFAULT_CONFIG) -> hw.HwConfig:
    """Greedy config for one NN vector (one-hot or soft); ``h0`` if the rollout is invalid."""
    return hw.HwConfig(*(int(v) for v in agent.hwopt_batch(nn_vector, h0)[0]))
