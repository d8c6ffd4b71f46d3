"""Composite and sequential hardware-optimisation environments.

Both are batched: a state holds ``n`` independent episodes and every
transition is a pure function of ``(state, action)``. Rewards use the
performance predictor's robust-scaled output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..accel import space as hw

COMPOSITE = "composite"
SEQUENTIAL = "sequential"
SETTINGS = (COMPOSITE, SEQUENTIAL)
N_PARAMS = len(hw.PARAM_NAMES)
SEQ_ACTIONS = 8
LOWS = np.array([lo for lo, _ in hw.PARAM_RANGES], dtype=np.int64)
SIZES = np.array(hw.PARAM_SIZES, dtype=np.int64)


class UnsupportedSettingError(ValueError):
    pass


class ActionRangeError(ValueError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    c_inv: float = 2.0
    b: float = 0.1
    t_max: int = 1
    metric: str = "cycles"

    def __post_init__(self):
        if self.c_inv < 0:
            raise ValueError("c_inv must be non-negative")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")


@dataclass(frozen=True)
class EnvState:
    nn: np.ndarray        # (n, nn_size), one-hot or soft
    config: np.ndarray    # (n, 7) current config
    step: np.ndarray      # (n,) steps already taken this episode
    perf_prev: np.ndarray  # (n,) scaled prediction for ``config``

    def __len__(self):
        return len(self.nn)


def check_setting(setting: str):
    if setting not in SETTINGS:
        raise UnsupportedSettingError(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def obs_size(setting: str, nn_size: int) -> int:
    check_setting(setting)
    return nn_size + hw.ONEHOT_SIZE + (N_PARAMS if setting == SEQUENTIAL else 0)


def episode_length(setting: str, cfg: EnvConfig) -> int:
    return cfg.t_max if setting == COMPOSITE else N_PARAMS * cfg.t_max


def scaled_perf(predictor, nn: np.ndarray, configs: np.ndarray) -> np.ndarray:
    x = np.concatenate([nn, hw.encode_onehot_batch(configs)], axis=1)
    return predictor.predict_scaled(x)


def reset_state(nn: np.ndarray, h0, predictor) -> EnvState:
    nn = np.atleast_2d(np.asarray(nn, dtype=float))
    config = np.tile(np.asarray(h0, dtype=np.int64), (len(nn), 1))
    return EnvState(nn, config, np.zeros(len(nn), dtype=np.int64), scaled_perf(predictor, nn, config))


def observe(setting: str, state: EnvState) -> np.ndarray:
    parts = [state.nn, hw.encode_onehot_batch(state.config)]
    if setting == SEQUENTIAL:
        indicator = np.zeros((len(state), N_PARAMS))
        indicator[np.arange(len(state)), state.step % N_PARAMS] = 1.0
        parts.append(indicator)
    return np.concatenate(parts, axis=1)


def action_to_config(setting: str, state: EnvState, actions: np.ndarray) -> np.ndarray:
    actions = np.asarray(actions, dtype=np.int64)
    if setting == COMPOSITE:
        actions = actions.reshape(len(state), N_PARAMS)
        if (actions < 0).any() or (actions >= SIZES).any():
            raise ActionRangeError("composite action outside its head's range")
        return LOWS + actions
    actions = actions.reshape(len(state))
    if (actions < 0).any() or (actions >= SEQ_ACTIONS).any():
        raise ActionRangeError(f"sequential action outside [0, {SEQ_ACTIONS})")
    p = state.step % N_PARAMS
    config = state.config.copy()
    rows = np.arange(len(state))
    config[rows, p] = LOWS[p] + actions % SIZES[p]
    return config


def env_step(setting: str, state: EnvState, actions, cfg: EnvConfig, predictor):
    """Advance every episode one step: ``(next_state, reward, done)``.

    Composite: terminal reward ``-P - C_inv * invalid``; intermediate ``-B``
    when the new config predicts worse than the previous one. Sequential:
    one reward after the last parameter of the last pass.
    """
    check_setting(setting)
    config = action_to_config(setting, state, actions)
    step = state.step + 1
    done = step >= episode_length(setting, cfg)
    reward = np.zeros(len(state))
    if setting == COMPOSITE:
        perf = scaled_perf(predictor, state.nn, config)
        invalid = ~hw.valid_mask(config)
        reward = np.where(done, -perf - cfg.c_inv * invalid,
                          np.where(perf > state.perf_prev, -cfg.b, 0.0))
    else:
        perf = state.perf_prev
        if done.any():
            perf = state.perf_prev.copy()
            perf[done] = scaled_perf(predictor, state.nn[done], config[done])
            invalid = ~hw.valid_mask(config[done])
            reward[done] = -perf[done] - cfg.c_inv * invalid
    return replace(state, config=config, step=step, perf_prev=perf), reward, done


class VecEnv:
    """Batch of auto-resetting episodes over architectures drawn by ``sample_nn``."""

    def __init__(self, setting, cfg: EnvConfig, predictor, sample_nn, n_envs: int, h0=hw.DEFAULT_CONFIG):
        check_setting(setting)
        self.setting = setting
        self.cfg = cfg
        self.predictor = predictor
        self.sample_nn = sample_nn
        self.n_envs = n_envs
        self.h0 = np.asarray(h0, dtype=np.int64)
        self.state = reset_state(sample_nn(n_envs), self.h0, predictor)

    def observe(self) -> np.ndarray:
        return observe(self.setting, self.state)

    def step(self, actions):
        self.state, reward, done = env_step(self.setting, self.state, actions, self.cfg, self.predictor)
        final_configs = self.state.config[done].copy()
        if done.any():
            fresh = reset_state(self.sample_nn(int(done.sum())), self.h0, self.predictor)
            nn = self.state.nn.copy()
            config = self.state.config.copy()
            step = self.state.step.copy()
            perf = self.state.perf_prev.copy()
            nn[done], config[done], step[done], perf[done] = fresh.nn, fresh.config, fresh.step, fresh.perf_prev
            self.state = EnvState(nn, config, step, perf)
        return self.observe(), reward, done, final_configs
