import math

import numpy as np
import pytest

from hwcodesign.accel import space as hw
from hwcodesign.codesign import (QUALITY, RESULT_COLUMNS, HwDistribution, RunConfig, TaskOracle,
                                 evaluate, exhaustive_hwgen_train, hwaware_nas_run, make_oracle,
                                 optimal_labels, score_generator, task_loss)
from hwcodesign.codesign.runs import _search_alpha
from hwcodesign.gradcore import MlpModel, RobustScaler, Tensor, parameter
from hwcodesign.nnspace import ArchDistribution, Architecture
from hwcodesign.surrogates.predictor import PerfPredictor


def test_quality_order():
    assert QUALITY[0] < QUALITY[3] < QUALITY[1] < QUALITY[2]  # C3 < CX < C5 < C7


def test_task_loss_forms_agree():
    oracle = make_oracle(9, seed=0)
    arch = Architecture.from_string("357x357x3")
    onehot = np.eye(4)[arch.indices()]
    assert task_loss(arch, oracle) == pytest.approx(task_loss(onehot, oracle))
    logits = np.random.default_rng(1).normal(size=(9, 4))
    dist = ArchDistribution(logits)
    t = task_loss(Tensor(dist.probs), oracle)
    assert isinstance(t, Tensor) and t.item() == pytest.approx(task_loss(dist, oracle))


def test_best_architecture_is_the_brute_force_minimum():
    oracle = make_oracle(4, seed=3)
    best = min((task_loss(Architecture.from_indices(np.array(i)), oracle), i)
               for i in np.ndindex(4, 4, 4, 4))
    assert tuple(oracle.best_architecture().indices()) == best[1]


def test_oracle_rejects_negative_kappa():
    with pytest.raises(ValueError):
        TaskOracle(np.zeros((9, 4)), kappa=-1.0)


def test_task_only_search_finds_oracle_optimum():
    oracle = make_oracle(9, seed=5)
    alpha, traj = _search_alpha(RunConfig(lam=0.0, iterations=300), None, oracle, None)
    assert Architecture.from_indices(alpha.numpy().argmax(axis=1)) == oracle.best_architecture()
    assert traj[-1] < traj[0]


def test_hw_distribution_probs_and_discretize():
    logits = np.zeros(hw.ONEHOT_SIZE)
    for (lo, _), off, v in zip(hw.PARAM_RANGES, hw.PARAM_OFFSETS, hw.DEFAULT_CONFIG):
        logits[off + v - lo] = 3.0
    d = HwDistribution(parameter(logits))
    p = d.probs().numpy()
    for off, size in zip(hw.PARAM_OFFSETS, hw.PARAM_SIZES):
        assert p[off:off + size].sum() == pytest.approx(1.0)
    assert d.discretize() == hw.DEFAULT_CONFIG
    with pytest.raises(ValueError):
        HwDistribution(parameter(np.zeros(10)))


def test_evaluate_marks_invalid_with_nan():
    oracle = make_oracle(9, 0)
    arch = Architecture.from_string("3" * 9)
    res = evaluate("x", RunConfig(), arch, (3, 3, 5, 6, 20, 20, 20), oracle)
    assert not res.valid and math.isnan(res.latency_s)
    row = res.csv_row()
    assert len(row) == len(RESULT_COLUMNS) and row[6] == "" and row[-1] == "0"
    ok = evaluate("x", RunConfig(), arch, hw.DEFAULT_CONFIG, oracle)
    assert ok.valid and ok.latency_s > 0


def test_hwaware_nas_keeps_template():
    model = MlpModel((36 + hw.ONEHOT_SIZE, 1), seed=0)
    pred = PerfPredictor(model, RobustScaler().fit(np.arange(4.0)), "cycles", 36)
    res = hwaware_nas_run(RunConfig(lam=1.0, iterations=20), pred, make_oracle(9, 0))
    assert res.config == hw.DEFAULT_CONFIG and res.method == "hwnas"


def test_exhaustive_generator_learns_labels():
    archs = np.random.default_rng(0).integers(0, 4, (200, 9))
    labels = optimal_labels(archs)
    assert hw.valid_mask(labels).all()
    gen = exhaustive_hwgen_train(archs, epochs=15, seed=0)
    assert gen.curve[-1] < gen.curve[0]
    score = score_generator(gen, archs[:50])
    assert 0 <= score.invalid_fraction <= 1 and score.n == 50
