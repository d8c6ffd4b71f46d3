"""Joint NN/HW search, baselines and HW-generator ablations."""

from .hwgen import (LAMBDA_SWEEP, HwGenerator, exhaustive_hwgen_train, optimal_labels,
                    perf_hwgen_train, score_generator)
from .oracle import DEFAULT_KAPPA, QUALITY, TaskOracle, make_oracle, task_loss
from .runs import (BETA_SWEEP, DEFAULT_LAMBDA, RESULT_COLUMNS, CodesignResult, HwDistribution,
                   RunConfig, dshwnas_run, dshwnas_sweep, evaluate, hwaware_nas_run, rhnas_run,
                   sequential_opt_run)
