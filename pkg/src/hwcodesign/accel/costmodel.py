"""Latency / energy / EDP model built on the tiling search."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from . import tiling
from .space import HwConfig, is_valid

CLOCK_HZ = 1e9
DRAM_JOULES_PER_BYTE = 320e-12


class InfeasibleWorkloadError(ValueError):
    """Even the smallest tile of a layer overflows one of the on-chip buffers."""


class InvalidConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LayerWorkload:
    in_h: int
    in_w: int
    c_in: int
    c_out: int
    k_h: int
    k_w: int
    stride: int = 1
    depthwise: bool = False

    def __post_init__(self):
        dims = (self.in_h, self.in_w, self.c_in, self.c_out, self.k_h, self.k_w, self.stride)
        if min(dims) < 1:
            raise ValueError(f"all layer dimensions must be >= 1: {self}")
        if self.depthwise and self.c_in != self.c_out:
            raise ValueError("depthwise layers need c_in == c_out")

    @property
    def out_h(self) -> int:
        return -(-self.in_h // self.stride)

    @property
    def out_w(self) -> int:
        return -(-self.in_w // self.stride)

    @property
    def macs(self) -> int:
        per_out = self.k_h * self.k_w * (1 if self.depthwise else self.c_in)
        return self.out_h * self.out_w * self.c_out * per_out

    def as_row(self) -> tuple[int, ...]:
        return (self.in_h, self.in_w, self.c_in, self.c_out, self.k_h, self.k_w,
                self.stride, int(self.depthwise))

    def to_json(self) -> dict:
        return asdict(self)


def workloads_to_json(workloads: Sequence[LayerWorkload]) -> str:
    return json.dumps([w.to_json() for w in workloads])


def workloads_from_json(text: str) -> list[LayerWorkload]:
    return [LayerWorkload(**rec) for rec in json.loads(text)]


@dataclass(frozen=True)
class TilingChoice:
    t_o: int
    t_i: int
    h_o: int
    w_o: int
    loop_order: str
    n_tiles: int
    dram_bytes: int


@dataclass(frozen=True)
class PerfReport:
    compute_cycles: float
    total_cycles: float
    bytes_inp: float
    bytes_wgt: float
    bytes_acc: float
    bytes_uop: float

    @classmethod
    def from_totals(cls, total_cycles, dram_bytes, compute_cycles=0.0) -> "PerfReport":
        """Report with all traffic attributed to the input stream; handy for unit arithmetic."""
        return cls(compute_cycles, total_cycles, dram_bytes, 0.0, 0.0, 0.0)

    @property
    def dram_bytes(self) -> float:
        return self.bytes_inp + self.bytes_wgt + self.bytes_acc + self.bytes_uop

    @property
    def latency(self) -> float:
        return self.total_cycles / CLOCK_HZ

    @property
    def energy(self) -> float:
        return self.dram_bytes * DRAM_JOULES_PER_BYTE

    @property
    def edp(self) -> float:
        return self.energy * self.latency

    def __add__(self, other: "PerfReport") -> "PerfReport":
        return PerfReport(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    CSV_HEADER = ("cycles", "bytes_inp", "bytes_wgt", "bytes_acc", "bytes_uop",
                  "latency_s", "energy_j", "edp_js")

    def csv_row(self) -> tuple:
        return (f"{self.total_cycles:.6g}", f"{self.bytes_inp:.0f}", f"{self.bytes_wgt:.0f}",
                f"{self.bytes_acc:.0f}", f"{self.bytes_uop:.0f}",
                f"{self.latency:.9e}", f"{self.energy:.9e}", f"{self.edp:.9e}")

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(self.CSV_HEADER)
        writer.writerow(self.csv_row())
        return buf.getvalue()


def _require_valid(config: HwConfig) -> None:
    ok, reason = is_valid(config)
    if not ok:
        raise InvalidConfigError(f"config {config} is invalid ({reason.value})")


def _layer_stats(workload: LayerWorkload, config: HwConfig) -> np.ndarray:
    stats = tiling.search_tiling(workload.as_row(), tuple(config))
    if not stats[tiling.FEASIBLE]:
        raise InfeasibleWorkloadError(f"{workload} does not fit on {config}")
    return stats


def optimal_tiling(workload: LayerWorkload, config: HwConfig) -> TilingChoice:
    _require_valid(config)
    s = _layer_stats(workload, config)
    return TilingChoice(
        t_o=int(s[tiling.T_O]), t_i=int(s[tiling.T_I]), h_o=int(s[tiling.T_H]), w_o=int(s[tiling.T_W]),
        loop_order=tiling.LOOP_ORDERS[int(s[tiling.ORDER])], n_tiles=int(s[tiling.TILES]),
        dram_bytes=int(s[tiling.INP] + s[tiling.WGT] + s[tiling.OUT] + s[tiling.UOP]),
    )


def report_from_stats(stats: np.ndarray) -> PerfReport:
    return PerfReport(
        float(stats[..., tiling.COMPUTE].sum()), float(stats[..., tiling.CYCLES].sum()),
        float(stats[..., tiling.INP].sum()), float(stats[..., tiling.WGT].sum()),
        float(stats[..., tiling.OUT].sum()), float(stats[..., tiling.UOP].sum()))


def simulate(workloads: Iterable[LayerWorkload], config: HwConfig) -> PerfReport:
    workloads = list(workloads)
    if not workloads:
        raise ValueError("simulate needs at least one workload")
    _require_valid(config)
    stats = np.stack([_layer_stats(w, config) for w in workloads])
    return report_from_stats(stats)
