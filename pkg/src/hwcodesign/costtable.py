"""Precomputed per-block cost tables.

Choice-block workloads depend only on the block position and the chosen
operator, and every reported quantity is additive over layers, so the cost of
any ``(architecture, config)`` pair is a sum of table entries. This turns grid
search over the whole valid space into a vectorised reduction.
"""

from __future__ import annotations

import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

import numpy as np

from .accel import tiling
from .accel.costmodel import CLOCK_HZ, DRAM_JOULES_PER_BYTE, PerfReport
from .accel.space import FULL_SPACE, config_index, valid_configs
from .nnspace import N_CHOICES, ChoiceId, SupernetSpec, block_workloads, fixed_workloads, supernet

log = logging.getLogger(__name__)

STAT_COLUMNS = (tiling.COMPUTE, tiling.CYCLES, tiling.INP, tiling.WGT, tiling.OUT, tiling.UOP)
COMPUTE, CYCLES, INP, WGT, OUT, UOP = range(6)
METRICS = ("cycles", "edp")
TABLE_VERSION = 2
_build_jobs = 1


def set_build_jobs(n: int) -> None:
    """Worker processes used when a table has to be built."""
    global _build_jobs
    _build_jobs = max(1, int(n))


def metric_from_stats(stats: np.ndarray, metric: str) -> np.ndarray:
    cycles = stats[..., CYCLES]
    if metric == "cycles":
        return cycles
    if metric == "latency":
        return cycles / CLOCK_HZ
    if metric == "edp":
        dram = stats[..., INP] + stats[..., WGT] + stats[..., OUT] + stats[..., UOP]
        return dram * DRAM_JOULES_PER_BYTE * cycles / CLOCK_HZ
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


class CostTable:
    """Per-config block costs for one supernet.

    ``fixed`` has shape ``(n_configs, 6)`` and ``blocks`` ``(n_configs, L, 4, 6)``
    with stat columns ``compute, cycles, inp, wgt, out, uop``.
    """

    def __init__(self, spec: SupernetSpec, configs: np.ndarray, fixed: np.ndarray, blocks: np.ndarray):
        self.spec = spec
        self.configs = np.asarray(configs, dtype=np.int64)
        self.fixed = fixed
        self.blocks = blocks
        self._row_of = np.full(FULL_SPACE.cardinality, -1, dtype=np.int64)
        self._row_of[config_index(self.configs)] = np.arange(len(self.configs))

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    def rows(self, configs) -> np.ndarray:
        rows = self._row_of[config_index(configs)]
        if (rows < 0).any():
            raise KeyError("config not present in cost table")
        return rows

    def pair_stats(self, archs: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Stats for paired ``archs[k]`` on ``configs[rows[k]]``."""
        archs = np.asarray(archs, dtype=np.int64)
        rows = np.asarray(rows, dtype=np.int64)
        pos = np.arange(archs.shape[1])
        return self.fixed[rows] + self.blocks[rows[:, None], pos[None, :], archs].sum(axis=1)

    def all_config_stats(self, arch: np.ndarray) -> np.ndarray:
        """Stats of one architecture on every config in the table, ``(n_configs, 6)``."""
        arch = np.asarray(arch, dtype=np.int64)
        pos = np.arange(len(arch))
        return self.fixed + self.blocks[:, pos, arch].sum(axis=1)

    def metric(self, archs, configs, metric: str) -> np.ndarray:
        return metric_from_stats(self.pair_stats(archs, self.rows(configs)), metric)

    def optimum(self, arch, metric: str) -> tuple[int, float]:
        """Grid-search optimum: (table row, metric value)."""
        values = metric_from_stats(self.all_config_stats(arch), metric)
        best = int(np.argmin(values))
        return best, float(values[best])

    def optima(self, archs, metric: str) -> tuple[np.ndarray, np.ndarray]:
        rows = np.empty(len(archs), dtype=np.int64)
        vals = np.empty(len(archs))
        for k, arch in enumerate(np.asarray(archs)):
            rows[k], vals[k] = self.optimum(arch, metric)
        return rows, vals

    def report(self, arch, config) -> PerfReport:
        s = self.pair_stats(np.asarray(arch)[None], self.rows(np.asarray(config)[None]))[0]
        return PerfReport(*(float(v) for v in s))


def _unique_layers(spec: SupernetSpec):
    stem, head = fixed_workloads(spec)
    rows: dict[tuple, int] = {}

    def idx(w):
        return rows.setdefault(w.as_row(), len(rows))

    fixed_idx = [idx(w) for w in stem + head]
    block_idx = [[[idx(w) for w in block_workloads(spec, pos, ChoiceId(c))]
                  for c in range(N_CHOICES)] for pos in range(spec.n_blocks)]
    return np.array(list(rows), dtype=np.int64), fixed_idx, block_idx


def _tiling_chunks(layers, configs, use_jit, jobs):
    if jobs <= 1 or len(configs) < 2 * jobs:
        return tiling.tiling_table(layers, configs, use_jit=use_jit)
    chunks = np.array_split(configs, jobs)
    with ProcessPoolExecutor(jobs) as pool:
        parts = list(pool.map(tiling.tiling_table, [layers] * jobs, chunks, [use_jit] * jobs))
    return np.concatenate(parts)


def build_table(spec: SupernetSpec, configs: np.ndarray | None = None, use_jit: bool | None = None,
                jobs: int | None = None) -> CostTable:
    configs = valid_configs() if configs is None else np.asarray(configs, dtype=np.int64)
    layers, fixed_idx, block_idx = _unique_layers(spec)
    raw = _tiling_chunks(layers, configs, use_jit, _build_jobs if jobs is None else jobs)
    if not raw[..., tiling.FEASIBLE].all():
        bad = np.argwhere(raw[..., tiling.FEASIBLE] == 0)[0]
        raise RuntimeError(f"layer {layers[bad[1]]} infeasible on config {configs[bad[0]]}")
    per_layer = raw[..., STAT_COLUMNS]
    fixed = per_layer[:, fixed_idx].sum(axis=1)
    blocks = np.zeros((len(configs), spec.n_blocks, N_CHOICES, len(STAT_COLUMNS)))
    for pos in range(spec.n_blocks):
        for c in range(N_CHOICES):
            blocks[:, pos, c] = per_layer[:, block_idx[pos][c]].sum(axis=1)
    return CostTable(spec, configs, fixed, blocks)


def _cache_dir() -> Path | None:
    root = os.environ.get("HWCODESIGN_CACHE", str(Path.home() / ".cache" / "hwcodesign"))
    if root.lower() in ("", "0", "off", "none"):
        return None
    return Path(root)


def _table_key(spec: SupernetSpec) -> str:
    src = Path(tiling.__file__).read_bytes() + spec.to_json().encode()
    return f"{spec.name}-v{TABLE_VERSION}-{hashlib.sha256(src).hexdigest()[:12]}"


@lru_cache(maxsize=None)
def cost_table(dataset: str = "cifar10") -> CostTable:
    """Cost table over all valid configs, memoised in memory and on disk."""
    spec = supernet(dataset)
    cache = _cache_dir()
    path = cache / f"{_table_key(spec)}.npz" if cache else None
    if path is not None and path.exists():
        with np.load(path) as data:
            return CostTable(spec, data["configs"], data["fixed"], data["blocks"])
    log.info("building %s cost table", dataset)
    table = build_table(spec)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, configs=table.configs, fixed=table.fixed, blocks=table.blocks)
        tmp.replace(path)
    return table
