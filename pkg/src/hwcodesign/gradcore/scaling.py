"""Median / IQR target scaling."""

from __future__ import annotations

import numpy as np


class RobustScaler:
    """``(x - median) / IQR`` per column, quantiles by linear interpolation.

    A zero IQR is replaced by 1 and recorded in ``degenerate``.
    """

    def __init__(self):
        self.median = None
        self.iqr = None
        self.degenerate = None

    @property
    def fitted(self) -> bool:
        return self.median is not None

    def fit(self, targets) -> "RobustScaler":
        y = np.asarray(targets, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if len(y) == 0:
            raise ValueError("cannot fit a scaler on an empty set")
        q1, med, q3 = np.percentile(y, [25.0, 50.0, 75.0], axis=0)
        iqr = q3 - q1
        self.degenerate = iqr <= 0
        self.iqr = np.where(self.degenerate, 1.0, iqr)
        self.median = med
        return self

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self._b(self.median, x)) / self._b(self.iqr, x)

    def inverse_transform(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z * self._b(self.iqr, z) + self._b(self.median, z)

    def _b(self, stat, x):
        if not self.fitted:
            raise RuntimeError("scaler is not fitted")
        # scalar stats for single-output data, per-column otherwise
        return stat[0] if stat.size == 1 else stat

    def state(self) -> dict:
        return {"median": self.median.tolist(), "iqr": self.iqr.tolist(),
                "degenerate": self.degenerate.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "RobustScaler":
        s = cls()
        s.median = np.array(state["median"], dtype=float)
        s.iqr = np.array(state["iqr"], dtype=float)
        s.degenerate = np.array(state["degenerate"], dtype=bool)
        return s
