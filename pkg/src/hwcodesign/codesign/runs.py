"""Joint NN/HW search loops and their baselines.

Optimisation uses the predictor (and ValidNet for DSHWNAS); every reported
number comes from the simulator via the cost table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import costtable as ct
from ..accel import space as hw
from ..gradcore import Adam, Tensor, concat, parameter
from ..nnspace import N_CHOICES, Architecture, encode_onehot
from ..rlopt.agent import HwOptAgent
from .oracle import TaskOracle, task_loss

DEFAULT_LAMBDA = 10.0
BETA_SWEEP = tuple(10.0 ** x for x in range(-7, 8))
RESULT_COLUMNS = ("method", "seed", "lam", "beta", "arch", "hw", "latency_s", "edp_js",
                  "task_loss", "valid")


@dataclass(frozen=True)
class RunConfig:
    lam: float = DEFAULT_LAMBDA
    iterations: int = 300
    lr: float = 0.05
    seed: int = 0
    metric: str = "cycles"
    dataset: str = "cifar10"
    init_scale: float = 1e-3

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class CodesignResult:
    method: str
    seed: int
    lam: float
    arch: Architecture
    config: hw.HwConfig
    valid: bool
    latency_s: float
    edp_js: float
    task_loss: float
    beta: float | None = None
    trajectory: list = field(default_factory=list)

    def csv_row(self) -> list[str]:
        def num(v):
            return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))
        return [self.method, str(self.seed), num(self.lam), num(self.beta), str(self.arch),
                str(self.config), num(self.latency_s), num(self.edp_js), num(self.task_loss),
                str(int(self.valid))]


def init_alpha(n_blocks: int, cfg: RunConfig) -> Tensor:
    rng = np.random.default_rng(cfg.seed)
    return parameter(rng.normal(0.0, cfg.init_scale, size=(n_blocks, N_CHOICES)))


def evaluate(method: str, cfg: RunConfig, arch: Architecture, config, oracle: TaskOracle,
             beta=None, trajectory=None) -> CodesignResult:
    """Simulator evaluation; invalid configs get NaN metrics."""
    config = hw.HwConfig(*(int(v) for v in config))
    valid, _ = hw.is_valid(config)
    latency = edp = float("nan")
    if valid:
        report = ct.cost_table(cfg.dataset).report(arch.indices(), config)
        latency, edp = report.latency, report.edp
    return CodesignResult(method, cfg.seed, cfg.lam, arch, config, valid, latency, edp,
                          task_loss(arch, oracle), beta, trajectory or [])


def _hw_onehot(config) -> Tensor:
    return Tensor(hw.encode_onehot(config)[None, :])


def _search_alpha(cfg: RunConfig, predictor, oracle: TaskOracle, hw_for) -> tuple[Tensor, list]:
    """Adam on alpha for ``task + lam * P(sigma(alpha), hw_for(sigma))``."""
    alpha = init_alpha(oracle.n_blocks, cfg)
    opt = Adam([alpha], lr=cfg.lr)
    trajectory = []
    for _ in range(cfg.iterations):
        probs = alpha.softmax(axis=-1)
        loss = task_loss(probs, oracle)
        if cfg.lam != 0.0:
            config = hw_for(probs.numpy().ravel())
            x = concat([probs.reshape(1, -1), _hw_onehot(config)], axis=1)
            loss = loss + predictor(x).sum() * cfg.lam
        opt.zero_grad()
        loss.backward()
        opt.step()
        trajectory.append(loss.item())
    return alpha, trajectory


def _argmax_arch(alpha: Tensor) -> Architecture:
    return Architecture.from_indices(alpha.numpy().argmax(axis=1))


def rhnas_run(cfg: RunConfig, agent: HwOptAgent, predictor, oracle: TaskOracle,
              h0=hw.DEFAULT_CONFIG) -> CodesignResult:
    """NAS regularised by predicted cost on the agent's HW for sigma(alpha)."""
    def hw_for(probs):
        return agent.hwopt_batch(probs, h0)[0]

    alpha, traj = _search_alpha(cfg, predictor, oracle, hw_for)
    arch = _argmax_arch(alpha)
    config = agent.hwopt_batch(encode_onehot(arch), h0)[0]
    return evaluate("rhnas", cfg, arch, config, oracle, trajectory=traj)


def hwaware_nas_run(cfg: RunConfig, predictor, oracle: TaskOracle, h0=hw.DEFAULT_CONFIG) -> CodesignResult:
    """NAS with the HW fixed to the template throughout."""
    alpha, traj = _search_alpha(cfg, predictor, oracle, lambda probs: h0)
    return evaluate("hwnas", cfg, _argmax_arch(alpha), h0, oracle, trajectory=traj)


def sequential_opt_run(cfg: RunConfig, agent: HwOptAgent, oracle: TaskOracle,
                       h0=hw.DEFAULT_CONFIG) -> CodesignResult:
    """Task-only NAS, then HW optimised for the resulting architecture."""
    stage1 = RunConfig(**{**cfg.to_json(), "lam": 0.0})
    alpha, traj = _search_alpha(stage1, None, oracle, None)
    arch = _argmax_arch(alpha)
    config = agent.hwopt_batch(encode_onehot(arch), h0)[0]
    return evaluate("sequential", cfg, arch, config, oracle, trajectory=traj)


class HwDistribution:
    """Per-parameter logits; ``probs`` is the concatenated row-wise softmax (length 36)."""

    def __init__(self, logits: Tensor):
        if logits.shape != (hw.ONEHOT_SIZE,):
            raise ValueError(f"HW logits must have shape ({hw.ONEHOT_SIZE},)")
        self.logits = logits

    def probs(self) -> Tensor:
        return concat([self.logits[o:o + s].softmax(axis=-1)
                       for o, s in zip(hw.PARAM_OFFSETS, hw.PARAM_SIZES)], axis=0)

    def discretize(self) -> hw.HwConfig:
        return hw.decode_onehot(self.logits.numpy())


def dshwnas_run(cfg: RunConfig, beta: float, predictor, validnet, oracle: TaskOracle) -> CodesignResult:
    """Joint gradient search over alpha and HW logits gamma."""
    alpha = init_alpha(oracle.n_blocks, cfg)
    gamma = HwDistribution(parameter(np.random.default_rng([cfg.seed, 1]).normal(
        0.0, cfg.init_scale, size=hw.ONEHOT_SIZE)))
    opt = Adam([alpha, gamma.logits], lr=cfg.lr)
    trajectory = []
    for _ in range(cfg.iterations):
        probs = alpha.softmax(axis=-1)
        hw_probs = gamma.probs()
        x = concat([probs.reshape(1, -1), hw_probs.reshape(1, -1)], axis=1)
        valid_loss = (validnet.valid_probability(hw_probs.reshape(1, -1)) - 1.0).abs().mean()
        loss = task_loss(probs, oracle) + predictor(x).sum() * cfg.lam + valid_loss * beta
        opt.zero_grad()
        loss.backward()
        opt.step()
        trajectory.append(loss.item())
    return evaluate("dshwnas", cfg, _argmax_arch(alpha), gamma.discretize(), oracle, beta, trajectory)


def dshwnas_sweep(cfg: RunConfig, predictor, validnet, oracle: TaskOracle,
                  betas=BETA_SWEEP) -> list[CodesignResult]:
    return [dshwnas_run(cfg, b, predictor, validnet, oracle) for b in betas]
