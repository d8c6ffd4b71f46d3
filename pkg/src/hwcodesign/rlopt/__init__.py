"""RL hardware optimizer: environments, PPO, DQN, evaluation and tuning."""

from .agent import HwOptAgent, hwopt
from .dqn import DQNConfig, dqn_train
from .envs import (COMPOSITE, SEQUENTIAL, ActionRangeError, EnvConfig, EnvState,
                   UnsupportedSettingError, env_step)
from .evaluate import optimality, optimality_ratio
from .hpo import hpo_random_search
from .ppo import PPOConfig, TrainingDivergedError, ppo_train
from .tuned import tuned
