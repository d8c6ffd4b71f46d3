"""Supernet search spaces, architecture encodings and workload expansion."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .accel.costmodel import LayerWorkload

SUPERNET_VERSION = 1


class ChoiceId(enum.IntEnum):
    C3 = 0
    C5 = 1
    C7 = 2
    CX = 3

    @property
    def char(self) -> str:
        return "357x"[self.value]

    @classmethod
    def from_char(cls, ch: str) -> "ChoiceId":
        try:
            return cls("357x".index(ch.lower()))
        except ValueError:
            raise ValueError(f"unknown choice {ch!r}; expected one of 3, 5, 7, x") from None


N_CHOICES = len(ChoiceId)
DW_KERNEL = {ChoiceId.C3: 3, ChoiceId.C5: 5, ChoiceId.C7: 7}


@dataclass(frozen=True)
class StageSpec:
    block: str  # "conv", "cb", "gap" or "fc"
    in_res: int
    in_ch: int
    out_ch: int
    repeat: int
    stride: int
    kernel: int = 1


@dataclass(frozen=True)
class SupernetSpec:
    name: str
    stages: tuple[StageSpec, ...]

    @property
    def n_blocks(self) -> int:
        return sum(s.repeat for s in self.stages if s.block == "cb")

    @property
    def onehot_size(self) -> int:
        return N_CHOICES * self.n_blocks

    @property
    def n_architectures(self) -> int:
        return N_CHOICES ** self.n_blocks

    def to_json(self) -> str:
        return json.dumps({
            "version": SUPERNET_VERSION,
            "name": self.name,
            "stages": [s.__dict__ for s in self.stages],
        }, indent=2)


_SUPERNETS = {
    "imagenet": SupernetSpec("imagenet", (
        StageSpec("conv", 224, 3, 16, 1, 2, kernel=3),
        StageSpec("cb", 112, 16, 64, 4, 2),
        StageSpec("cb", 56, 64, 160, 4, 2),
        StageSpec("cb", 28, 160, 320, 8, 2),
        StageSpec("cb", 14, 320, 640, 4, 2),
        StageSpec("conv", 7, 640, 1024, 1, 1, kernel=1),
        StageSpec("gap", 7, 1024, 1024, 1, 1),
        StageSpec("fc", 1, 1024, 1000, 1, 1),
    )),
    "cifar10": SupernetSpec("cifar10", (
        StageSpec("conv", 32, 3, 64, 1, 1, kernel=3),
        StageSpec("cb", 32, 64, 256, 4, 2),
        StageSpec("cb", 16, 256, 640, 4, 2),
        StageSpec("cb", 8, 640, 1280, 1, 2),
        StageSpec("gap", 4, 1280, 1280, 1, 1),
        StageSpec("fc", 1, 1280, 10, 1, 1),
    )),
}


def supernet(dataset: str) -> SupernetSpec:
    try:
        return _SUPERNETS[dataset]
    except KeyError:
        raise ValueError(f"unknown dataset {dataset!r}; expected one of {sorted(_SUPERNETS)}") from None


@dataclass(frozen=True)
class Architecture:
    choices: tuple[ChoiceId, ...]

    def __str__(self) -> str:
        return "".join(c.char for c in self.choices)

    def __len__(self) -> int:
        return len(self.choices)

    @classmethod
    def from_string(cls, text: str) -> "Architecture":
        return cls(tuple(ChoiceId.from_char(ch) for ch in text))

    @classmethod
    def from_indices(cls, idx: Sequence[int]) -> "Architecture":
        return cls(tuple(ChoiceId(int(i)) for i in idx))

    def indices(self) -> np.ndarray:
        return np.array([int(c) for c in self.choices], dtype=np.int64)


def encode_onehot(arch: Architecture) -> np.ndarray:
    return encode_indices(arch.indices()[None])[0]


def encode_indices(archs: np.ndarray) -> np.ndarray:
    """Batch one-hot: ``(n, L)`` choice indices -> ``(n, 4L)``, block-major."""
    archs = np.asarray(archs, dtype=np.int64)
    n, n_layers = archs.shape
    out = np.zeros((n, n_layers, N_CHOICES))
    np.put_along_axis(out, archs[:, :, None], 1.0, axis=2)
    return out.reshape(n, n_layers * N_CHOICES)


def decode_onehot(vec) -> Architecture:
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1 or vec.size % N_CHOICES:
        raise ValueError(f"one-hot length must be a multiple of {N_CHOICES}")
    return Architecture.from_indices(vec.reshape(-1, N_CHOICES).argmax(axis=1))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ArchDistribution:
    """Per-block logits over the four choices."""

    logits: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)
        if self.logits.ndim != 2 or self.logits.shape[1] != N_CHOICES:
            raise ValueError(f"logits must be (L, {N_CHOICES}), got {self.logits.shape}")

    @classmethod
    def uniform(cls, n_blocks: int) -> "ArchDistribution":
        return cls(np.zeros((n_blocks, N_CHOICES)))

    @property
    def probs(self) -> np.ndarray:
        return softmax_rows(self.logits)

    def argmax(self) -> Architecture:
        return Architecture.from_indices(self.logits.argmax(axis=1))


def sample_indices(probs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` architectures (as index rows) from a ``(L, 4)`` probability matrix."""
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random((n, probs.shape[0]))
    return (u[:, :, None] > cdf[None, :, :]).sum(axis=2).astype(np.int64)


def sample(dist: ArchDistribution, seed) -> Architecture:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Architecture.from_indices(sample_indices(dist.probs, 1, rng)[0])


def random_architectures(spec: SupernetSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, N_CHOICES, size=(n, spec.n_blocks))


# workload expansion ---------------------------------------------------------

def _block_positions(spec: SupernetSpec):
    """Yield ``(in_res, in_ch, out_ch, stride)`` for every choice block."""
    for st in spec.stages:
        if st.block != "cb":
            continue
        res, cin = st.in_res, st.in_ch
        for j in range(st.repeat):
            stride = st.stride if j == 0 else 1
            yield res, cin, st.out_ch, stride
            res = -(-res // stride)
            cin = st.out_ch


@lru_cache(maxsize=None)
def block_positions(spec: SupernetSpec) -> tuple:
    return tuple(_block_positions(spec))


def block_workloads(spec: SupernetSpec, position: int, choice: ChoiceId) -> list[LayerWorkload]:
    """Convs of one choice block; only the branch that carries compute is modelled."""
    res, cin, cout, stride = block_positions(spec)[position]
    branch = cout // 2
    main_in = cin if stride > 1 else cin // 2
    res_out = -(-res // stride)
    first = LayerWorkload(res, res, main_in, branch, 1, 1, 1)
    if choice != ChoiceId.CX:
        k = DW_KERNEL[choice]
        return [
            first,
            LayerWorkload(res, res, branch, branch, k, k, stride, depthwise=True),
            LayerWorkload(res_out, res_out, branch, branch, 1, 1, 1),
        ]
    layers = [first, LayerWorkload(res, res, branch, branch, 3, 3, stride, depthwise=True)]
    for rep in range(3):
        layers.append(LayerWorkload(res_out, res_out, branch, branch, 1, 1, 1))
        if rep < 2:
            layers.append(LayerWorkload(res_out, res_out, branch, branch, 3, 3, 1, depthwise=True))
    return layers


def fixed_workloads(spec: SupernetSpec) -> tuple[list[LayerWorkload], list[LayerWorkload]]:
    """Stem and head layers; pooling is dropped, FC becomes a 1x1 conv on a 1x1 map."""
    stem, head = [], []
    seen_cb = False
    for st in spec.stages:
        if st.block == "cb":
            seen_cb = True
        elif st.block == "conv":
            (head if seen_cb else stem).append(
                LayerWorkload(st.in_res, st.in_res, st.in_ch, st.out_ch, st.kernel, st.kernel, st.stride))
        elif st.block == "fc":
            head.append(LayerWorkload(1, 1, st.in_ch, st.out_ch, 1, 1, 1))
    return stem, head


def workloads_of(arch: Architecture, spec: SupernetSpec) -> list[LayerWorkload]:
    if len(arch) != spec.n_blocks:
        raise ValueError(f"architecture has {len(arch)} blocks, {spec.name} needs {spec.n_blocks}")
    stem, head = fixed_workloads(spec)
    layers = list(stem)
    for pos, choice in enumerate(arch.choices):
        layers.extend(block_workloads(spec, pos, choice))
    return layers + head
