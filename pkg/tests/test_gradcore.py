import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradcheck import max_relative_error, smooth_graphs
from hwcodesign.gradcore import (Adam, MlpModel, RobustScaler, Tensor, checkpoint, clip_grad_norm,
                                 cross_entropy, l1_loss, mse_loss, parameter)


@pytest.mark.parametrize("seed,plan,leaves", smooth_graphs(15, start=1000), ids=lambda v: "")
def test_random_graph_gradients(seed, plan, leaves):
    assert max_relative_error(plan, leaves) < 1e-4


def test_broadcast_gradient_is_summed():
    x = parameter(np.ones((3, 4)))
    b = parameter(np.zeros(4))
    (x + b).sum().backward()
    np.testing.assert_array_equal(b.grad, np.full(4, 3.0))


def test_gradient_accumulates_over_reuse():
    x = parameter(np.array([2.0]))
    (x * x + x).sum().backward()
    assert x.grad[0] == pytest.approx(5.0)


def test_softmax_rows_sum_to_one():
    z = Tensor(np.random.default_rng(0).normal(size=(5, 7)) * 30)
    np.testing.assert_allclose(z.softmax(axis=-1).data.sum(axis=1), 1.0)
    assert np.isfinite(z.log_softmax(axis=-1).data).all()


def test_mlp_gradient_matches_finite_difference():
    rng = np.random.default_rng(1)
    model = MlpModel((5, 8, 3), seed=2)
    x = rng.normal(size=(4, 5))
    y = rng.normal(size=(4, 3))
    loss = mse_loss(model(x), y)
    model.zero_grad()
    loss.backward()
    w = model.weights[0]
    eps = 1e-6
    for idx in [(0, 0), (2, 5), (4, 7)]:
        orig = w.data[idx]
        w.data[idx] = orig + eps
        up = mse_loss(model.predict(x), y).item()
        w.data[idx] = orig - eps
        down = mse_loss(model.predict(x), y).item()
        w.data[idx] = orig
        assert w.grad[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-5, abs=1e-8)


def test_predict_matches_graph_forward():
    model = MlpModel((6, 16, 16, 2), seed=0)
    x = np.random.default_rng(0).normal(size=(10, 6))
    np.testing.assert_allclose(model(x).data, model.predict(x))


def test_adam_minimises_quadratic():
    p = parameter(np.array([3.0, -2.0]))
    opt = Adam([p], lr=0.1)
    for _ in range(500):
        opt.zero_grad()
        (p * p).sum().backward()
        opt.step()
    assert np.abs(p.data).max() < 1e-2


def test_clip_grad_norm():
    p = parameter(np.zeros(2))
    p.grad = np.array([3.0, 4.0])
    assert clip_grad_norm([p], 1.0) == pytest.approx(5.0)
    assert np.linalg.norm(p.grad) == pytest.approx(1.0)


def test_losses():
    assert l1_loss(np.array([1.0, -1.0]), np.array([0.0, 0.0])).item() == 1.0
    with pytest.raises(ValueError):
        l1_loss(np.zeros(2), np.zeros(3))
    logits = np.log(np.array([[0.25, 0.75]]))
    assert cross_entropy(logits, [1]).item() == pytest.approx(-np.log(0.75))
    assert cross_entropy(logits, [1], (1.0, 2.0)).item() == pytest.approx(-2 * np.log(0.75))
    with pytest.raises(ValueError):
        cross_entropy(logits, [2])


@given(st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=50))
def test_scaler_roundtrip(values):
    y = np.array(values)
    s = RobustScaler().fit(y)
    np.testing.assert_allclose(s.inverse_transform(s.transform(y)), y, rtol=1e-9, atol=1e-6)


def test_scaler_degenerate_iqr():
    s = RobustScaler().fit(np.full(10, 4.0))
    assert s.degenerate.all()
    np.testing.assert_array_equal(s.transform(np.array([5.0])), [1.0])


def test_checkpoint_roundtrip(tmp_path):
    model = MlpModel((3, 4, 1), seed=5)
    scaler = RobustScaler().fit(np.arange(10.0))
    digest = checkpoint.save(tmp_path / "m.json", {"mlp": model}, scaler, {"kind": "x"})
    assert digest == checkpoint.file_hash(tmp_path / "m.json")
    models, s2, meta = checkpoint.load(tmp_path / "m.json")
    x = np.ones((2, 3))
    np.testing.assert_array_equal(models["mlp"].predict(x), model.predict(x))
    assert meta == {"kind": "x"} and s2.median == scaler.median


def test_checkpoint_errors(tmp_path):
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(tmp_path / "bad.json")
    (tmp_path / "old.json").write_text('{"version": 99}')
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.load(tmp_path / "old.json")
