import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hwcodesign import costtable as ct
from hwcodesign.accel import space as hw
from hwcodesign.accel.costmodel import simulate
from hwcodesign.nnspace import (N_CHOICES, ArchDistribution, Architecture, ChoiceId, decode_onehot,
                                encode_indices, encode_onehot, sample_indices, supernet, workloads_of)

CIFAR = supernet("cifar10")
arch_st = st.lists(st.integers(0, 3), min_size=9, max_size=9).map(Architecture.from_indices)


def test_supernet_sizes():
    assert CIFAR.n_blocks == 9 and CIFAR.onehot_size == 36
    assert CIFAR.n_architectures == 4 ** 9
    assert supernet("imagenet").n_blocks == 20
    with pytest.raises(ValueError):
        supernet("mnist")


@given(arch_st)
def test_arch_encoding_roundtrip(arch):
    assert Architecture.from_string(str(arch)) == arch
    vec = encode_onehot(arch)
    assert vec.sum() == 9 and decode_onehot(vec) == arch
    np.testing.assert_array_equal(encode_indices(arch.indices()[None])[0], vec)


def test_choice_characters():
    assert str(Architecture.from_indices([0, 1, 2, 3])) == "357x"
    with pytest.raises(ValueError):
        Architecture.from_string("39")


def test_cx_block_has_more_layers_than_c3():
    a3 = workloads_of(Architecture.from_string("3" * 9), CIFAR)
    ax = workloads_of(Architecture.from_string("x" + "3" * 8), CIFAR)
    assert len(ax) == len(a3) + 4
    with pytest.raises(ValueError):
        workloads_of(Architecture.from_string("333"), CIFAR)


def test_distribution_sampling_matches_probs():
    probs = np.array([[0.1, 0.2, 0.3, 0.4], [1.0, 0.0, 0.0, 0.0]])
    draws = sample_indices(probs, 40000, np.random.default_rng(0))
    freq = np.bincount(draws[:, 0], minlength=N_CHOICES) / len(draws)
    np.testing.assert_allclose(freq, probs[0], atol=0.01)
    assert (draws[:, 1] == 0).all()


def test_distribution_validation():
    with pytest.raises(ValueError):
        ArchDistribution(np.zeros((3, 5)))
    d = ArchDistribution.uniform(9)
    np.testing.assert_allclose(d.probs, 0.25)


# cost table ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def table():
    return ct.cost_table("cifar10")


def test_table_covers_valid_space(table):
    assert table.n_configs == len(hw.valid_configs())


def test_table_matches_direct_simulation(table):
    rng = np.random.default_rng(5)
    for _ in range(10):
        idx = rng.integers(0, 4, 9)
        cfg = hw.HwConfig(*table.configs[rng.integers(table.n_configs)])
        direct = simulate(workloads_of(Architecture.from_indices(idx), CIFAR), cfg)
        via = table.report(idx, cfg)
        assert via.total_cycles == pytest.approx(direct.total_cycles, rel=1e-12)
        assert via.dram_bytes == pytest.approx(direct.dram_bytes, rel=1e-12)


def test_optimum_is_the_grid_minimum(table):
    arch = np.array([ChoiceId.C5] * 9)
    row, value = table.optimum(arch, "cycles")
    every = table.metric(np.repeat(arch[None], table.n_configs, 0), table.configs, "cycles")
    assert value == every.min() and every[row] == value


def test_rows_reject_invalid_configs(table):
    with pytest.raises(KeyError):
        table.rows(np.array([[3, 3, 5, 6, 20, 20, 20]]))


def test_chunked_build_is_deterministic():
    configs = hw.valid_configs()[:40]
    a = ct.build_table(CIFAR, configs, jobs=1)
    b = ct.build_table(CIFAR, configs, jobs=2)
    np.testing.assert_array_equal(a.blocks, b.blocks)
    np.testing.assert_array_equal(a.fixed, b.fixed)


def test_unknown_metric(table):
    with pytest.raises(ValueError):
        table.metric(np.zeros((1, 9), int), table.configs[:1], "power")
