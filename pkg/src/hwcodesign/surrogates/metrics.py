"""Rank correlation."""

from __future__ import annotations

import numpy as np

from .._jit import JIT_ENABLED, njit


@njit
def _pair_balance_jit(x, y):
    n = x.shape[0]
    s = 0
    for i in range(n - 1):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            p = (x[j] - xi) * (y[j] - yi)
            if p > 0:
                s += 1
            elif p < 0:
                s -= 1
    return s


def _pair_balance_numpy(x, y, chunk=2048):
    s = 0
    n = len(x)
    for start in range(0, n, chunk):
        xi = x[start:start + chunk, None]
        yi = y[start:start + chunk, None]
        dx = np.sign(x[None, :] - xi)
        dy = np.sign(y[None, :] - yi)
        prod = dx * dy
        rows = np.arange(start, min(start + chunk, n))[:, None]
        # count each unordered pair once
        prod = np.where(np.arange(n)[None, :] > rows, prod, 0)
        s += int(prod.sum())
    return s


def kendall_tau(pred, true, use_jit: bool | None = None) -> float:
    """Kendall tau-a: tied pairs count as neither concordant nor discordant."""
    x = np.asarray(pred, dtype=float).ravel()
    y = np.asarray(true, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("kendall_tau needs equal-length inputs")
    n = len(x)
    if n < 2:
        raise ValueError("kendall_tau needs at least two values")
    use_jit = JIT_ENABLED if use_jit is None else use_jit
    s = _pair_balance_jit(x, y) if use_jit else _pair_balance_numpy(x, y)
    return s / (n * (n - 1) / 2)
