"""Simulator-labelled datasets for the surrogates."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .. import costtable as ct
from ..accel import space as hw
from ..nnspace import N_CHOICES, encode_indices, random_architectures, supernet

METRIC_COLUMNS = ("cycles", "edp", "gemm_cycles", "bytes_inp", "bytes_wgt", "bytes_acc", "bytes_uop")


@dataclass
class PerfDataset:
    dataset: str
    archs: np.ndarray    # (n, L) choice indices
    configs: np.ndarray  # (n, 7) log2 parameters
    metrics: np.ndarray  # (n, len(METRIC_COLUMNS))

    def __len__(self):
        return len(self.archs)

    def features(self) -> np.ndarray:
        return np.concatenate([encode_indices(self.archs), hw.encode_onehot_batch(self.configs)], axis=1)

    def target(self, metric: str) -> np.ndarray:
        return self.metrics[:, METRIC_COLUMNS.index(metric)]

    def subset(self, idx) -> "PerfDataset":
        return PerfDataset(self.dataset, self.archs[idx], self.configs[idx], self.metrics[idx])

    def split(self, seed, test_fraction=0.2) -> tuple["PerfDataset", "PerfDataset"]:
        perm = np.random.default_rng(seed).permutation(len(self))
        n_test = int(round(len(self) * test_fraction))
        return self.subset(perm[n_test:]), self.subset(perm[:n_test])

    def to_csv(self, path):
        n_blocks = self.archs.shape[1]
        header = ([f"nn_{i}" for i in range(n_blocks * N_CHOICES)]
                  + [f"hw_{i}" for i in range(hw.ONEHOT_SIZE)] + list(METRIC_COLUMNS))
        feats = self.features().astype(np.int64)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for f, m in zip(feats, self.metrics):
                w.writerow([*f.tolist(), *(repr(float(v)) for v in m)])

    @classmethod
    def from_csv(cls, path, dataset: str = "cifar10") -> "PerfDataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        n_nn = sum(1 for h in header if h.startswith("nn_"))
        nn = body[:, :n_nn].reshape(len(body), -1, N_CHOICES).argmax(axis=2)
        hw_oh = body[:, n_nn:n_nn + hw.ONEHOT_SIZE]
        configs = np.array([hw.decode_onehot(v) for v in hw_oh], dtype=np.int64).reshape(-1, 7)
        return cls(dataset, nn.astype(np.int64), configs, body[:, n_nn + hw.ONEHOT_SIZE:])


def label(dataset: str, archs: np.ndarray, configs: np.ndarray) -> np.ndarray:
    table = ct.cost_table(dataset)
    stats = table.pair_stats(archs, table.rows(configs))
    return np.stack([
        ct.metric_from_stats(stats, "cycles"),
        ct.metric_from_stats(stats, "edp"),
        stats[:, ct.COMPUTE], stats[:, ct.INP], stats[:, ct.WGT], stats[:, ct.OUT], stats[:, ct.UOP],
    ], axis=1)


def gen_dataset(n: int, seed, dataset: str = "cifar10") -> PerfDataset:
    """Uniform random architectures paired with uniform random valid configs."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    spec = supernet(dataset)
    archs = random_architectures(spec, n, rng)
    valid = hw.valid_configs()
    configs = valid[rng.integers(0, len(valid), size=n)]
    return PerfDataset(dataset, archs, configs, label(dataset, archs, configs))


@dataclass
class ValidityDataset:
    configs: np.ndarray
    valid: np.ndarray  # bool

    def __len__(self):
        return len(self.configs)

    def features(self) -> np.ndarray:
        return hw.encode_onehot_batch(self.configs)

    def split(self, seed, test_fraction=0.2) -> tuple["ValidityDataset", "ValidityDataset"]:
        perm = np.random.default_rng(seed).permutation(len(self))
        n_test = int(round(len(self) * test_fraction))
        tr, te = perm[n_test:], perm[:n_test]
        return (ValidityDataset(self.configs[tr], self.valid[tr]),
                ValidityDataset(self.configs[te], self.valid[te]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*(f"hw_{i}" for i in range(hw.ONEHOT_SIZE)), "valid"])
            for f, v in zip(self.features().astype(np.int64), self.valid):
                w.writerow([*f.tolist(), int(v)])


def gen_validity_dataset(n: int, seed) -> ValidityDataset:
    """Configs drawn uniformly over the full space, labelled by the analytical checker."""
    rng = np.random.default_rng(seed)
    full = hw.FULL_SPACE.as_array()
    configs = full[rng.integers(0, len(full), size=n)]
    return ValidityDataset(configs, hw.valid_mask(configs))


def validity_from_csv(path) -> ValidityDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array(rows[1:], dtype=np.int64)
    configs = np.array([hw.decode_onehot(v) for v in body[:, :hw.ONEHOT_SIZE]], dtype=np.int64).reshape(-1, 7)
    return ValidityDataset(configs, body[:, hw.ONEHOT_SIZE].astype(bool))
