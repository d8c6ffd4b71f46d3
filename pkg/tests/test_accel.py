import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hwcodesign.accel import space as hw
from hwcodesign.accel import tiling
from hwcodesign.accel.costmodel import (InfeasibleWorkloadError, InvalidConfigError, LayerWorkload,
                                        PerfReport, optimal_tiling, simulate)
from tiling_oracle import brute_force, random_layer, traffic

configs_st = st.tuples(*(st.integers(lo, hi) for lo, hi in hw.PARAM_RANGES)).map(lambda t: hw.HwConfig(*t))


def test_full_space_size_and_order():
    arr = hw.FULL_SPACE.as_array()
    assert arr.shape == (32768, 7)
    assert [tuple(c) for c in arr[:3]] == [tuple(c) for c in itertools.islice(hw.FULL_SPACE, 3)]
    np.testing.assert_array_equal(hw.config_index(arr), np.arange(len(arr)))


def test_default_config_is_valid():
    assert hw.is_valid(hw.DEFAULT_CONFIG) == (True, hw.Validity.OK)


def test_isa_failure_reported_before_sram():
    # narrowest uop, big buffers: fails both checks
    cfg = hw.HwConfig(3, 3, 5, 6, 20, 20, 20)
    assert hw.is_valid(cfg) == (False, hw.Validity.ISA_WIDTH)


def test_sram_only_failure():
    cfg = hw.HwConfig(6, 6, 6, 6, 19, 19, 19)
    ok, reason = hw.is_valid(cfg)
    assert not ok and reason is hw.Validity.SRAM_BUDGET


def test_out_of_range_raises():
    with pytest.raises(hw.ConfigRangeError):
        hw.is_valid(hw.HwConfig(2, 4, 5, 5, 15, 18, 17))


@given(configs_st)
def test_valid_mask_matches_scalar_check(cfg):
    assert bool(hw.valid_mask(np.array([cfg]))[0]) == hw.is_valid(cfg)[0]


@given(configs_st)
def test_onehot_roundtrip(cfg):
    vec = hw.encode_onehot(cfg)
    assert vec.sum() == 7 and hw.decode_onehot(vec) == cfg
    np.testing.assert_array_equal(hw.encode_onehot_batch(np.array([cfg]))[0], vec)


def test_restricted_subspace():
    sub = hw.FULL_SPACE.restrict(block_in_log2=4, inp_buf_log2=(14, 15))
    assert sub.cardinality == 32768 // 4 // 4
    assert all(c.block_in_log2 == 4 for c in sub)


# tiling ------------------------------------------------------------------------

def test_search_matches_brute_force_sample():
    rng = np.random.default_rng(7)
    valid = hw.valid_configs()
    for _ in range(20):
        layer, cfg = random_layer(rng), valid[rng.integers(len(valid))]
        got = tiling.search_tiling(layer, cfg)
        want = brute_force(layer, cfg)
        if want is None:
            assert got[tiling.FEASIBLE] == 0
        else:
            np.testing.assert_array_equal(got, want)


def test_numpy_fallback_matches_numba():
    rng = np.random.default_rng(3)
    valid = hw.valid_configs()
    for _ in range(15):
        layer, cfg = random_layer(rng), valid[rng.integers(len(valid))]
        np.testing.assert_allclose(tiling.search_tiling(layer, cfg, use_jit=False),
                                   tiling.search_tiling(layer, cfg, use_jit=True))


def test_single_tile_traffic_is_one_pass_over_each_tensor():
    # 1x1 conv small enough to sit on chip in one tile
    w = LayerWorkload(4, 4, 16, 16, 1, 1)
    cfg = hw.DEFAULT_CONFIG
    t = optimal_tiling(w, cfg)
    assert t.n_tiles == 1
    uop = (16 // 16) * (16 // 16) * 1 * (1 << cfg.uop_width_log2) // 8
    assert t.dram_bytes == 16 * 16 + 16 * 16 + 16 * 16 + uop


def test_compute_cycles_count_whole_gemm_blocks():
    w = LayerWorkload(4, 4, 20, 20, 1, 1)
    rep = simulate([w], hw.DEFAULT_CONFIG)
    # 16 output pixels, ceil(20/16)^2 = 4 blocks each
    assert rep.compute_cycles == 16 * 4


def test_enlarging_a_buffer_never_adds_traffic():
    rng = np.random.default_rng(11)
    valid = hw.valid_configs()
    checked = 0
    while checked < 25:
        cfg = valid[rng.integers(len(valid))].copy()
        p = int(rng.integers(4, 7))
        if cfg[p] == 20:
            continue
        big = cfg.copy()
        big[p] += 1
        layer = random_layer(rng)
        a, b = tiling.search_tiling(layer, cfg), tiling.search_tiling(layer, big)
        if not a[tiling.FEASIBLE]:
            continue
        assert b[tiling.FEASIBLE] and traffic(b) <= traffic(a)
        checked += 1


def test_simulate_rejects_invalid_config():
    with pytest.raises(InvalidConfigError):
        simulate([LayerWorkload(8, 8, 16, 16, 3, 3)], hw.HwConfig(3, 3, 5, 6, 20, 20, 20))


def test_infeasible_layer():
    # smallest weight tile is 64 x 64 x 49 bytes, far over 8 KiB
    w = LayerWorkload(4, 4, 2048, 2048, 7, 7)
    cfg = hw.HwConfig(6, 6, 6, 5, 13, 13, 13)
    assert hw.is_valid(cfg)[0]
    with pytest.raises(InfeasibleWorkloadError):
        simulate([w], cfg)


def test_layer_validation():
    with pytest.raises(ValueError):
        LayerWorkload(0, 4, 4, 4, 1, 1)
    with pytest.raises(ValueError):
        LayerWorkload(4, 4, 4, 8, 3, 3, depthwise=True)


def test_report_arithmetic():
    r = PerfReport.from_totals(2e9, 1e6)
    assert r.latency == pytest.approx(2.0)
    assert r.energy == pytest.approx(1e6 * 320e-12)
    assert r.edp == pytest.approx(r.energy * 2.0)
    s = r + r
    assert s.total_cycles == 4e9 and s.dram_bytes == 2e6
