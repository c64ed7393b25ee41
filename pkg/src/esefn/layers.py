"""Parameter containers for the layers the networks are built from."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import functional as F
from .tensor import Tensor


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


@dataclass
class Linear:
    weight: Tensor  # [out, in]
    bias: Tensor  # [out]

    @classmethod
    def create(cls, in_features: int, out_features: int, rng: np.random.Generator) -> Linear:
        w = glorot_uniform(rng, (out_features, in_features), in_features, out_features)
        return cls(w, zeros(out_features))

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return F.fully_connected(x, self.weight, self.bias)


@dataclass
class Conv1d:
    weight: Tensor  # [out, in, k]
    bias: Tensor
    stride: int = 1
    padding: int = 0

    @classmethod
    def create(cls, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator, stride=1, padding=0) -> Conv1d:
        w = glorot_uniform(rng, (out_ch, in_ch, kernel), in_ch * kernel, out_ch * kernel)
        return cls(w, zeros(out_ch), stride, padding)

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, self.bias, self.stride, self.padding)


@dataclass
class ConvTranspose1d:
    weight: Tensor  # [in, out, k]
    bias: Tensor
    stride: int = 1
    padding: int = 0

    @classmethod
    def create(
        cls, in_ch: int, out_ch: int, kernel: int, rng: np.random.Generator, stride=1, padding=0
    ) -> ConvTranspose1d:
        w = glorot_uniform(rng, (in_ch, out_ch, kernel), in_ch * kernel, out_ch * kernel)
        return cls(w, zeros(out_ch), stride, padding)

    def output_length(self, length: int) -> int:
        return F.conv_transpose1d_output_length(length, self.weight.shape[2], self.stride, self.padding)

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv1d_transposed(x, self.weight, self.bias, self.stride, self.padding)


@dataclass
class MLP:
    """``fc2(relu(fc1(x)))``."""

    fc1: Linear
    fc2: Linear

    @classmethod
    def create(cls, in_features: int, hidden: int, out_features: int, rng: np.random.Generator) -> MLP:
        return cls(Linear.create(in_features, hidden, rng), Linear.create(hidden, out_features, rng))

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(F.relu(self.fc1(x)))


def named_parameters(obj, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
    """Yield ``(dotted_name, tensor)`` for every trainable tensor, in field order."""
    for field in dataclasses.fields(obj):
        value = getattr(obj, field.name)
        name = f"{prefix}{field.name}"
        if isinstance(value, Tensor):
            if value.requires_grad:
                yield name, value
        elif dataclasses.is_dataclass(value):
            yield from named_parameters(value, name + ".")
