"""Surrogate probes: interpolation over NN distributions and ValidNet gradients."""

from __future__ import annotations

import numpy as np

from ..accel import space as hw
from ..gradcore import Tensor, l1_loss
from ..nnspace import encode_indices, sample_indices
from .predictor import PerfPredictor
from .validnet import ValidNet


def _stable_mean(values: np.ndarray) -> float:
    # exact when every value is identical
    return float(values[0] + np.mean(values - values[0]))


def predictor_interpolation_ratio(predictor: PerfPredictor, probs: np.ndarray, h0,
                                  n_samples: int = 100, seed=0) -> float:
    """Prediction on the soft distribution over the Monte-Carlo mean on sampled one-hots."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    probs = np.asarray(probs, dtype=float)
    rng = np.random.default_rng(seed)
    hw_vec = hw.encode_onehot(h0)
    soft = np.concatenate([probs.ravel(), hw_vec])
    numerator = predictor.predict(soft)[0]
    archs = sample_indices(probs, n_samples, rng)
    x = np.concatenate([encode_indices(archs), np.tile(hw_vec, (n_samples, 1))], axis=1)
    return float(numerator / _stable_mean(predictor.predict(x)))


def interpolation_ratios(predictor: PerfPredictor, n_blocks: int, h0, n_dists: int = 100,
                         n_samples: int = 100, seed=0, logit_scale: float = 1.0) -> np.ndarray:
    """Ratios for ``n_dists`` random distributions with N(0, logit_scale) logits."""
    rng = np.random.default_rng(seed)
    out = np.empty(n_dists)
    for k in range(n_dists):
        logits = rng.normal(0.0, logit_scale, size=(n_blocks, 4))
        z = np.exp(logits - logits.max(axis=1, keepdims=True))
        out[k] = predictor_interpolation_ratio(predictor, z / z.sum(axis=1, keepdims=True), h0,
                                               n_samples, seed=rng)
    return out


class TripleError(ValueError):
    pass


def interpolation_path(v, r, i, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Points ``v -> r`` for phi in [0, 1) then ``r -> i`` for phi in [1, 2)."""
    phis = 2.0 * np.arange(steps) / steps
    v, r, i = (np.asarray(a, dtype=float) for a in (v, r, i))
    first = phis < 1.0
    pts = np.where(first[:, None],
                   (1 - phis)[:, None] * v + phis[:, None] * r,
                   (2 - phis)[:, None] * r + (phis - 1)[:, None] * i)
    return phis, pts


def validity_gradient_magnitudes(net: ValidNet, points: np.ndarray) -> np.ndarray:
    """``|d L1(P_valid(x), 1) / dx|`` per point and coordinate."""
    out = np.empty_like(points)
    for k, pt in enumerate(points):
        x = Tensor(pt[None, :], requires_grad=True)
        loss = l1_loss(net.valid_probability(x), np.ones(1))
        loss.backward()
        out[k] = np.abs(x.grad[0])
    return out


def gradient_interpolation_study(net: ValidNet, v, r, i, steps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Heatmap ``(steps, 36)`` of ValidNet gradient magnitudes along the path."""
    v_ok, _ = hw.is_valid(hw.decode_onehot(v))
    i_ok, _ = hw.is_valid(hw.decode_onehot(i))
    if not v_ok:
        raise TripleError("start point v must be a valid design")
    if i_ok:
        raise TripleError("end point i must be an invalid design")
    phis, pts = interpolation_path(v, r, i, steps)
    return phis, validity_gradient_magnitudes(net, pts)


def random_triple(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-hot (valid, uniformly random, invalid) designs."""
    full = hw.FULL_SPACE.as_array()
    mask = hw.valid_mask(full)
    v = full[mask][rng.integers(mask.sum())]
    i = full[~mask][rng.integers((~mask).sum())]
    r = full[rng.integers(len(full))]
    return hw.encode_onehot(v), hw.encode_onehot(r), hw.encode_onehot(i)


def gradient_contrast(net: ValidNet, n_triples: int = 20, steps: int = 64, seed=0) -> dict:
    """Mean gradient near the valid end over mean near the invalid end."""
    rng = np.random.default_rng(seed)
    near_v, near_i, maps = [], [], []
    for _ in range(n_triples):
        phis, grads = gradient_interpolation_study(net, *random_triple(rng), steps=steps)
        maps.append(grads)
        near_v.append(grads[phis <= 0.25].mean())
        near_i.append(grads[phis >= 1.5].mean())
    mv, mi = float(np.mean(near_v)), float(np.mean(near_i))
    return {"near_valid": mv, "near_invalid": mi, "contrast": mv / mi if mi > 0 else np.inf,
            "mean_map": np.mean(maps, axis=0), "phis": phis}
