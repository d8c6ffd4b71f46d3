"""Deep Q-learning for the sequential setting."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..gradcore import Adam, MlpModel, clip_grad_norm, mse_loss
from . import envs
from .agent import HIDDEN, HwOptAgent
from .normalize import RewardNormalizer
from .ppo import TrainingDivergedError, nn_sampler


@dataclass(frozen=True)
class DQNConfig:
    lr: float = 5e-4
    gamma: float = 0.99
    n_envs: int = 8
    buffer_size: int = 50_000
    batch_size: int = 64
    learning_starts: int = 2_000
    eps_start: float = 1.0
    eps_end: float = 0.02
    eps_fraction: float = 0.3
    target_sync: int = 2_000
    max_grad_norm: float = 10.0
    total_steps: int = 300_000

    def to_json(self) -> dict:
        return asdict(self)


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int):
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.capacity = capacity
        self.pos = 0
        self.size = 0

    def add(self, obs, actions, rewards, next_obs, dones):
        for k in range(len(obs)):
            i = self.pos
            self.obs[i], self.actions[i], self.rewards[i] = obs[k], actions[k], rewards[k]
            self.next_obs[i], self.dones[i] = next_obs[k], dones[k]
            self.pos = (self.pos + 1) % self.capacity
            self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=n)
        return self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx]


def dqn_train(setting: str, env_cfg: envs.EnvConfig, hp: DQNConfig, seed, predictor,
              n_blocks: int | None = None, callback=None, log_every: int = 10_000) -> tuple[HwOptAgent, list[dict]]:
    envs.check_setting(setting)
    if setting != envs.SEQUENTIAL:
        raise envs.UnsupportedSettingError(
            "DQN supports only the sequential setting; the composite action is multi-categorical")
    if predictor.metric != env_cfg.metric:
        raise ValueError(f"predictor metric {predictor.metric!r} != env metric {env_cfg.metric!r}")
    n_blocks = n_blocks or predictor.nn_size // 4
    rng = np.random.default_rng(seed)
    obs_dim = envs.obs_size(setting, n_blocks * 4)
    q = MlpModel((obs_dim, *HIDDEN, envs.SEQ_ACTIONS), seed=rng)
    target = q.copy()
    opt = Adam(q.parameters, lr=hp.lr)
    agent = HwOptAgent(setting, q, env_cfg, n_blocks * 4, "dqn",
                       meta={"dqn": hp.to_json(), "seed": int(seed) if np.isscalar(seed) else None})
    env = envs.VecEnv(setting, env_cfg, predictor, nn_sampler(n_blocks, rng), hp.n_envs)
    normalizer = RewardNormalizer(hp.n_envs, hp.gamma)
    buf = ReplayBuffer(hp.buffer_size, obs_dim)
    obs = env.observe()
    history: list[dict] = []
    ep_return = np.zeros(hp.n_envs)
    finished: list[float] = []
    steps = 0
    last_sync = 0
    next_log = log_every
    decay_steps = max(1, int(hp.eps_fraction * hp.total_steps))
    while steps < hp.total_steps:
        eps = hp.eps_end + (hp.eps_start - hp.eps_end) * max(0.0, 1.0 - steps / decay_steps)
        greedy = q.predict(obs).argmax(axis=1)
        explore = rng.random(hp.n_envs) < eps
        actions = np.where(explore, rng.integers(0, envs.SEQ_ACTIONS, size=hp.n_envs), greedy)
        next_obs, reward, done, _ = env.step(actions)
        ep_return += reward
        finished.extend(ep_return[done].tolist())
        ep_return[done] = 0.0
        # auto-reset replaces next_obs on done; terminal targets ignore it anyway
        buf.add(obs, actions, normalizer(reward, done), next_obs, done)
        obs = next_obs
        steps += hp.n_envs

        if steps >= hp.learning_starts:
            o, a, r, o2, d = buf.sample(hp.batch_size, rng)
            y = r + hp.gamma * (1.0 - d) * target.predict(o2).max(axis=1)
            loss = mse_loss(q(o).take_along(a[:, None], axis=-1)[:, 0], y)
            if not np.isfinite(loss.item()):
                raise TrainingDivergedError(f"Q loss became {loss.item()} at environment step {steps}")
            opt.zero_grad()
            loss.backward()
            clip_grad_norm(q.parameters, hp.max_grad_norm)
            opt.step()
        if steps - last_sync >= hp.target_sync:
            target.load_from(q)
            last_sync = steps
        if steps >= next_log or steps >= hp.total_steps:
            next_log += log_every
            row = {"step": steps, "epsilon": eps,
                   "mean_return": float(np.mean(finished)) if finished else float("nan")}
            finished = []
            if callback is not None:
                row.update(callback(agent, steps) or {})
            history.append(row)
    return agent, history
