"""Configurable accelerator design space and its analytical validity rule."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

PARAM_NAMES = (
    "block_in_log2",
    "block_out_log2",
    "uop_width_log2",
    "uop_buf_log2",
    "inp_buf_log2",
    "wgt_buf_log2",
    "acc_buf_log2",
)
PARAM_RANGES = ((3, 6), (3, 6), (5, 6), (5, 6), (13, 20), (13, 20), (13, 20))
PARAM_SIZES = tuple(hi - lo + 1 for lo, hi in PARAM_RANGES)
PARAM_OFFSETS = tuple(int(x) for x in np.cumsum((0,) + PARAM_SIZES[:-1]))
ONEHOT_SIZE = sum(PARAM_SIZES)

SRAM_BUDGET_BYTES = 1 << 19  # 512 KiB
ACC_BYTES_LOG2 = 2  # 32-bit accumulators


class ConfigRangeError(ValueError):
    pass


class HwConfig(NamedTuple):
    """One accelerator design point, every field a log2 value."""

    block_in_log2: int
    block_out_log2: int
    uop_width_log2: int
    uop_buf_log2: int
    inp_buf_log2: int
    wgt_buf_log2: int
    acc_buf_log2: int

    @property
    def block_in(self) -> int:
        return 1 << self.block_in_log2

    @property
    def block_out(self) -> int:
        return 1 << self.block_out_log2

    @property
    def uop_width_bits(self) -> int:
        return 1 << self.uop_width_log2

    @property
    def uop_buf_bytes(self) -> int:
        return 1 << (self.uop_buf_log2 + 10)

    @property
    def inp_buf_bytes(self) -> int:
        return 1 << self.inp_buf_log2

    @property
    def wgt_buf_bytes(self) -> int:
        return 1 << self.wgt_buf_log2

    @property
    def acc_buf_bytes(self) -> int:
        return 1 << self.acc_buf_log2

    def to_json(self) -> list[int]:
        return [int(v) for v in self]

    @classmethod
    def from_json(cls, values: Sequence[int]) -> "HwConfig":
        if len(values) != 7:
            raise ConfigRangeError(f"expected 7 parameters, got {len(values)}")
        cfg = cls(*(int(v) for v in values))
        check_range(cfg)
        return cfg

    def __str__(self) -> str:
        return "-".join(str(v) for v in self)


DEFAULT_CONFIG = HwConfig(4, 4, 5, 5, 15, 18, 17)


def check_range(config: HwConfig, ranges=PARAM_RANGES) -> None:
    for name, value, (lo, hi) in zip(PARAM_NAMES, config, ranges):
        if not lo <= value <= hi:
            raise ConfigRangeError(f"{name}={value} outside [{lo}, {hi}]")


class Validity(str, enum.Enum):
    OK = "ok"
    ISA_WIDTH = "isa-width"
    SRAM_BUDGET = "sram-budget"


def address_bits(config: HwConfig) -> tuple[int, int, int]:
    """Index bits the micro-op needs for the input, weight and accumulator buffers."""
    inp = config.inp_buf_log2 - config.block_in_log2
    wgt = config.wgt_buf_log2 - config.block_in_log2 - config.block_out_log2
    acc = config.acc_buf_log2 - config.block_out_log2 - ACC_BYTES_LOG2
    return inp, wgt, acc


def sram_bytes(config: HwConfig) -> int:
    return config.inp_buf_bytes + config.wgt_buf_bytes + config.acc_buf_bytes + config.uop_buf_bytes


def is_valid(config: HwConfig) -> tuple[bool, Validity]:
    """Check the micro-op address width and the on-chip SRAM budget.

    The ISA check runs first, so a config failing both reports ``ISA_WIDTH``.
    """
    check_range(config)
    if sum(address_bits(config)) > config.uop_width_bits:
        return False, Validity.ISA_WIDTH
    if sram_bytes(config) > SRAM_BUDGET_BYTES:
        return False, Validity.SRAM_BUDGET
    return True, Validity.OK


def valid_mask(configs: np.ndarray) -> np.ndarray:
    """Vectorised ``is_valid`` over an ``(n, 7)`` integer array."""
    c = np.asarray(configs, dtype=np.int64)
    bi, bo, uw, ub, ib, wb, ab = c.T
    addr = (ib - bi) + (wb - bi - bo) + (ab - bo - ACC_BYTES_LOG2)
    isa_ok = addr <= (1 << uw)
    sram = (1 << ib) + (1 << wb) + (1 << ab) + (1 << (ub + 10))
    return isa_ok & (sram <= SRAM_BUDGET_BYTES)


@dataclass(frozen=True)
class HwSpace:
    """Cartesian product of per-parameter ranges.

    Sub-spaces are built with :meth:`restrict`; the default is the full space
    of 32768 design points.
    """

    ranges: tuple[tuple[int, int], ...] = PARAM_RANGES
    default: HwConfig = field(default=DEFAULT_CONFIG)

    def __post_init__(self):
        for (lo, hi), (glo, ghi) in zip(self.ranges, PARAM_RANGES):
            if not glo <= lo <= hi <= ghi:
                raise ConfigRangeError(f"range [{lo}, {hi}] outside [{glo}, {ghi}]")

    @property
    def cardinality(self) -> int:
        return int(np.prod([hi - lo + 1 for lo, hi in self.ranges]))

    def restrict(self, **fixed) -> "HwSpace":
        """Return a sub-space; values are ints (pinned) or ``(lo, hi)`` pairs."""
        ranges = list(self.ranges)
        for name, value in fixed.items():
            idx = PARAM_NAMES.index(name)
            ranges[idx] = (value, value) if isinstance(value, int) else tuple(value)
        return HwSpace(tuple(ranges), self.default)

    def __iter__(self) -> Iterator[HwConfig]:
        axes = [range(lo, hi + 1) for lo, hi in self.ranges]
        for values in itertools.product(*axes):
            yield HwConfig(*values)

    def __len__(self) -> int:
        return self.cardinality

    def as_array(self) -> np.ndarray:
        """All configs as an ``(n, 7)`` array in lexicographic order."""
        axes = [np.arange(lo, hi + 1) for lo, hi in self.ranges]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1).astype(np.int64)


FULL_SPACE = HwSpace()


def enumerate_space(space: HwSpace = FULL_SPACE) -> list[HwConfig]:
    return list(space)


def valid_fraction(space: HwSpace = FULL_SPACE) -> float:
    return float(valid_mask(space.as_array()).mean())


def valid_configs(space: HwSpace = FULL_SPACE) -> np.ndarray:
    arr = space.as_array()
    return arr[valid_mask(arr)]


# one-hot encoding -----------------------------------------------------------

def encode_onehot(config) -> np.ndarray:
    vec = np.zeros(ONEHOT_SIZE)
    for value, (lo, _), off in zip(config, PARAM_RANGES, PARAM_OFFSETS):
        vec[off + value - lo] = 1.0
    return vec


def encode_onehot_batch(configs: np.ndarray) -> np.ndarray:
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros((len(configs), ONEHOT_SIZE))
    rows = np.arange(len(configs))
    for p, ((lo, _), off) in enumerate(zip(PARAM_RANGES, PARAM_OFFSETS)):
        out[rows, off + configs[:, p] - lo] = 1.0
    return out


def decode_onehot(vec) -> HwConfig:
    """Row-wise argmax decoding; also accepts soft (probability) vectors."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (ONEHOT_SIZE,):
        raise ValueError(f"expected a length-{ONEHOT_SIZE} vector, got shape {vec.shape}")
    values = []
    for (lo, _), off, size in zip(PARAM_RANGES, PARAM_OFFSETS, PARAM_SIZES):
        values.append(lo + int(np.argmax(vec[off:off + size])))
    return HwConfig(*values)


def config_index(configs: np.ndarray) -> np.ndarray:
    """Position of each config in the lexicographic enumeration of the full space."""
    configs = np.asarray(configs, dtype=np.int64).reshape(-1, 7)
    idx = np.zeros(len(configs), dtype=np.int64)
    for p, (lo, _) in enumerate(PARAM_RANGES):
        idx = idx * PARAM_SIZES[p] + (configs[:, p] - lo)
    return idx
