"""Clipped-surrogate PPO over the batched HW environments."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..gradcore import Adam, MlpModel, Tensor, clip_grad_norm, concat
from ..nnspace import encode_indices, softmax_rows
from . import envs
from .agent import HIDDEN, HwOptAgent, head_slices, n_outputs
from .normalize import RewardNormalizer

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class PPOConfig:
    lr: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip: float = 0.2
    n_envs: int = 16
    steps_per_update: int = 512
    epochs: int = 4
    minibatch: int = 128
    ent_coef: float = 0.01
    vf_coef: float = 0.5
    max_grad_norm: float = 0.5
    total_steps: int = 300_000

    def to_json(self) -> dict:
        return asdict(self)


def nn_sampler(n_blocks: int, rng: np.random.Generator, soft_fraction: float = 0.5):
    """Draw NN inputs: one-hot random architectures mixed with random soft distributions."""

    def draw(n: int) -> np.ndarray:
        out = encode_indices(rng.integers(0, 4, size=(n, n_blocks)))
        soft = rng.random(n) < soft_fraction
        if soft.any():
            logits = rng.normal(0.0, 2.0, size=(int(soft.sum()), n_blocks, 4))
            out[soft] = softmax_rows(logits.reshape(-1, 4)).reshape(int(soft.sum()), -1)
        return out

    return draw


def log_probs(setting: str, logits: Tensor, actions: np.ndarray) -> tuple[Tensor, Tensor]:
    """Joint log-probability of ``actions`` and policy entropy, per row."""
    if setting == envs.COMPOSITE:
        lps, ents = [], []
        for h, s in enumerate(head_slices()):
            lp = logits[:, s].log_softmax(axis=-1)
            lps.append(lp.take_along(actions[:, h:h + 1], axis=-1))
            ents.append((lp.exp() * lp).sum(axis=-1, keepdims=True) * -1.0)
        return concat(lps, axis=1).sum(axis=1), concat(ents, axis=1).sum(axis=1)
    lp = logits.log_softmax(axis=-1)
    return lp.take_along(actions[:, None], axis=-1).sum(axis=1), (lp.exp() * lp).sum(axis=-1) * -1.0


def _sample_categorical(logits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(z)
    cdf = np.cumsum(p / p.sum(axis=1, keepdims=True), axis=1)
    u = rng.random((len(logits), 1))
    return np.minimum((u > cdf).sum(axis=1), logits.shape[1] - 1)


def sample_actions(setting: str, logits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if setting == envs.COMPOSITE:
        return np.stack([_sample_categorical(logits[:, s], rng) for s in head_slices()], axis=1)
    return _sample_categorical(logits, rng)


def action_log_probs(setting: str, logits: np.ndarray, actions: np.ndarray) -> np.ndarray:
    with_grad = log_probs(setting, Tensor(logits), actions)[0]
    return with_grad.numpy()


def _check_finite(name: str, value: float, step: int):
    if not np.isfinite(value):
        raise TrainingDivergedError(f"{name} became {value} at environment step {step}")


def ppo_train(setting: str, env_cfg: envs.EnvConfig, hp: PPOConfig, seed, predictor,
              n_blocks: int | None = None, callback=None) -> tuple[HwOptAgent, list[dict]]:
    """Train a policy; returns the frozen agent and one log row per update.

    ``callback(agent, env_step)`` may return a dict merged into the log row.
    """
    envs.check_setting(setting)
    if predictor.metric != env_cfg.metric:
        raise ValueError(f"predictor metric {predictor.metric!r} != env metric {env_cfg.metric!r}")
    n_blocks = n_blocks or predictor.nn_size // 4
    rng = np.random.default_rng(seed)
    obs_dim = envs.obs_size(setting, n_blocks * 4)
    policy = MlpModel((obs_dim, *HIDDEN, n_outputs(setting)), seed=rng)
    policy.weights[-1].data *= 0.01
    value = MlpModel((obs_dim, *HIDDEN, 1), seed=rng)
    pi_opt, v_opt = Adam(policy.parameters, lr=hp.lr), Adam(value.parameters, lr=hp.lr)
    agent = HwOptAgent(setting, policy, env_cfg, n_blocks * 4, "ppo",
                       meta={"ppo": hp.to_json(), "seed": int(seed) if np.isscalar(seed) else None})

    env = envs.VecEnv(setting, env_cfg, predictor, nn_sampler(n_blocks, rng), hp.n_envs)
    normalizer = RewardNormalizer(hp.n_envs, hp.gamma)
    horizon = max(1, hp.steps_per_update // hp.n_envs)
    obs = env.observe()
    history: list[dict] = []
    steps = 0
    ep_return = np.zeros(hp.n_envs)
    finished: list[float] = []
    while steps < hp.total_steps:
        buf_obs, buf_act, buf_logp, buf_val, buf_rew, buf_done = [], [], [], [], [], []
        for _ in range(horizon):
            logits = policy.predict(obs)
            actions = sample_actions(setting, logits, rng)
            buf_obs.append(obs)
            buf_act.append(actions)
            buf_logp.append(action_log_probs(setting, logits, actions))
            buf_val.append(value.predict(obs)[:, 0])
            obs, reward, done, _ = env.step(actions)
            ep_return += reward
            finished.extend(ep_return[done].tolist())
            ep_return[done] = 0.0
            buf_rew.append(normalizer(reward, done))
            buf_done.append(done)
        steps += horizon * hp.n_envs

        rewards, dones, values = np.array(buf_rew), np.array(buf_done), np.array(buf_val)
        next_value = value.predict(obs)[:, 0]
        adv = np.zeros_like(rewards)
        last = np.zeros(hp.n_envs)
        for t in reversed(range(horizon)):
            nv = next_value if t == horizon - 1 else values[t + 1]
            nonterminal = 1.0 - dones[t]
            delta = rewards[t] + hp.gamma * nv * nonterminal - values[t]
            last = delta + hp.gamma * hp.gae_lambda * nonterminal * last
            adv[t] = last
        returns = (adv + values).reshape(-1)
        adv = adv.reshape(-1)
        b_obs = np.concatenate(buf_obs)
        b_act = np.concatenate(buf_act)
        b_logp = np.concatenate(buf_logp)

        n = len(b_obs)
        for _ in range(hp.epochs):
            perm = rng.permutation(n)
            for start in range(0, n, hp.minibatch):
                idx = perm[start:start + hp.minibatch]
                a = adv[idx]
                a = (a - a.mean()) / (a.std() + 1e-8)
                logp, entropy = log_probs(setting, policy(b_obs[idx]), b_act[idx])
                ratio = (logp - b_logp[idx]).exp()
                surr = (ratio * a).minimum(ratio.clip(1 - hp.clip, 1 + hp.clip) * a)
                pi_loss = surr.mean() * -1.0 - entropy.mean() * hp.ent_coef
                v_loss = ((value(b_obs[idx])[:, 0] - returns[idx]) ** 2).mean() * hp.vf_coef
                _check_finite("policy loss", pi_loss.item(), steps)
                _check_finite("value loss", v_loss.item(), steps)
                pi_opt.zero_grad()
                pi_loss.backward()
                clip_grad_norm(policy.parameters, hp.max_grad_norm)
                pi_opt.step()
                v_opt.zero_grad()
                v_loss.backward()
                clip_grad_norm(value.parameters, hp.max_grad_norm)
                v_opt.step()

        row = {"step": steps, "mean_return": float(np.mean(finished)) if finished else float("nan")}
        finished = []
        if callback is not None:
            row.update(callback(agent, steps) or {})
        history.append(row)
        log.debug("ppo %s step %d return %.4f", setting, steps, row["mean_return"])
    return agent, history

