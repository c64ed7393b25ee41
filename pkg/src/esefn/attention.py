"""Squeeze-excitation attention and its expansion variants for modal/channel fusion.

All three blocks share one recipe: summarise each channel of a ``[C, L]``
map into a scalar, pass the ``C`` summaries through a bottleneck
``sigmoid(fc_up(relu(fc_down(.))))`` and scale every channel row by its gate.
The ESE blocks first widen the map with convolutions before summarising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functional as F
from .errors import ConfigurationError, DimensionError
from .layers import Conv1d, ConvTranspose1d, Linear
from .tensor import Tensor

DEFAULT_MNET_KERNELS = (3, 5, 7)
DEFAULT_MNET_WIDTH_FACTORS = (2, 4, 8)


@dataclass
class SEBlockParams:
    fc_reduce: Linear  # C -> C/r
    fc_expand: Linear  # C/r -> C
    reduction: int

    def __post_init__(self):
        c = self.channels
        if self.reduction < 1 or c % self.reduction:
            raise ConfigurationError(f"SE block needs r >= 1 dividing C, got C={c}, r={self.reduction}")
        if self.fc_reduce.out_features != c // self.reduction or self.fc_expand.out_features != c:
            raise ConfigurationError(
                f"SE block FC shapes {self.fc_reduce.weight.shape}, {self.fc_expand.weight.shape} "
                f"do not match C={c}, r={self.reduction}"
            )

    @property
    def channels(self) -> int:
        return self.fc_reduce.in_features

    @classmethod
    def create(cls, channels: int, reduction: int, rng: np.random.Generator) -> SEBlockParams:
        if reduction < 1 or channels % reduction:
            raise ConfigurationError(f"SE block needs r >= 1 dividing C, got C={channels}, r={reduction}")
        hidden = channels // reduction
        return cls(Linear.create(channels, hidden, rng), Linear.create(hidden, channels, rng), reduction)


def excitation(summary: Tensor, down: Linear, up: Linear) -> Tensor:
    return F.sigmoid(up(F.relu(down(summary))))


def se_attention(x: Tensor, params: SEBlockParams) -> tuple[Tensor, Tensor]:
    """Plain squeeze-excitation over the channels of ``x`` (``[C, L]`` or ``[B, C, L]``)."""
    if x.ndim < 2 or x.shape[-2] != params.channels:
        raise DimensionError(f"se_attention input shape {x.shape} does not match C={params.channels}")
    attn = excitation(F.global_avg_pool(x), params.fc_reduce, params.fc_expand)
    return F.scale_channels(x, attn), attn


@dataclass
class MNetParams:
    """Modal-wise ESE block: three stacked same-length convs ``n -> ... -> m``, then excitation ``m -> m/r -> n``."""

    conv3: Conv1d
    conv2: Conv1d
    conv1: Conv1d
    fc4: Linear  # m -> m / r_m
    fc3: Linear  # m / r_m -> n
    n: int
    d: int
    r_m: int

    def __post_init__(self):
        n, d, m = self.n, self.d, self.m
        if n < 2:
            raise ConfigurationError(f"M-Net needs at least 2 modalities, got n={n}")
        convs = (self.conv3, self.conv2, self.conv1)
        if self.conv3.weight.shape[1] != n:
            raise ConfigurationError(f"first expansion conv takes {self.conv3.weight.shape[1]} channels, expected n={n}")
        for prev, nxt in zip(convs, convs[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ConfigurationError("expansion conv channel widths do not chain")
        d_m = self.d_m
        if m % n:
            raise ConfigurationError(f"m={m} must be divisible by n={n}")
        if m * d_m <= n * d:
            raise ConfigurationError(f"expansion must grow the map: m*d_m={m * d_m} <= n*d={n * d}")
        if m >= n * d:
            raise ConfigurationError(f"squeezed size must shrink: m={m} >= n*d={n * d}")
        if self.r_m < 1 or m % self.r_m:
            raise ConfigurationError(f"r_m={self.r_m} must divide m={m}")
        if self.fc4.weight.shape != (m // self.r_m, m) or self.fc3.weight.shape != (n, m // self.r_m):
            raise ConfigurationError(
                f"excitation FC shapes {self.fc4.weight.shape}, {self.fc3.weight.shape} do not match m={m}, n={n}"
            )

    @property
    def m(self) -> int:
        return self.conv1.weight.shape[0]

    @property
    def d_m(self) -> int:
        length = self.d
        for conv in (self.conv3, self.conv2, self.conv1):
            length = F.conv1d_output_length(length, conv.weight.shape[2], conv.stride, conv.padding)
        return length

    @classmethod
    def create(
        cls,
        n: int,
        d: int,
        rng: np.random.Generator,
        r_m: int = 2,
        kernels: tuple[int, int, int] = DEFAULT_MNET_KERNELS,
        widths: tuple[int, int, int] | None = None,
    ) -> MNetParams:
        if widths is None:
            widths = tuple(f * n for f in DEFAULT_MNET_WIDTH_FACTORS)
        if any(k % 2 == 0 for k in kernels):
            raise ConfigurationError(f"same-padding expansion needs odd kernels, got {kernels}")
        if d * n <= widths[-1]:
            raise ConfigurationError(f"M-Net needs d > {widths[-1] // n} for n={n}, got d={d}")
        chans = (n, *widths)
        conv3, conv2, conv1 = (
            Conv1d.create(chans[i], chans[i + 1], kernels[i], rng, padding=kernels[i] // 2) for i in range(3)
        )
        m = widths[-1]
        if r_m < 1 or m % r_m:
            raise ConfigurationError(f"r_m={r_m} must divide m={m}")
        return cls(conv3, conv2, conv1, Linear.create(m, m // r_m, rng), Linear.create(m // r_m, n, rng), n, d, r_m)


def mnet_forward(f: Tensor, params: MNetParams) -> tuple[Tensor, Tensor]:
    """Gate each modality row of ``f`` (``[n, d]`` or ``[B, n, d]``) by one scalar.

    Returns ``(h_m, w_m)`` with ``h_m[i] = f[i] * w_m[i]``.
    """
    if f.ndim < 2 or f.shape[-2:] != (params.n, params.d):
        raise DimensionError(f"mnet_forward input shape {f.shape} does not match n={params.n}, d={params.d}")
    expanded = params.conv1(params.conv2(params.conv3(f)))
    w_m = excitation(F.global_avg_pool(expanded), params.fc4, params.fc3)
    return F.scale_channels(f, w_m), w_m


@dataclass
class CNetParams:
    """Channel-wise ESE block: one transposed conv lengthening ``n -> n1``, then excitation ``d -> d/r -> d``."""

    conv4: ConvTranspose1d
    fc6: Linear  # d -> d / r_c
    fc5: Linear  # d / r_c -> d
    d: int
    n: int
    r_c: int

    def __post_init__(self):
        d = self.d
        if self.conv4.weight.shape[:2] != (d, d):
            raise ConfigurationError(f"conv4 weight shape {self.conv4.weight.shape} must be ({d}, {d}, k)")
        if self.n1 <= self.n:
            raise ConfigurationError(f"channel expansion must lengthen: n1={self.n1} <= n={self.n}")
        if self.r_c < 1 or d % self.r_c:
            raise ConfigurationError(f"r_c={self.r_c} must divide d={d}")
        if self.fc6.weight.shape != (d // self.r_c, d) or self.fc5.weight.shape != (d, d // self.r_c):
            raise ConfigurationError(f"excitation FC shapes {self.fc6.weight.shape}, {self.fc5.weight.shape}")

    @property
    def n1(self) -> int:
        return self.conv4.output_length(self.n)

    @classmethod
    def create(
        cls, d: int, n: int, rng: np.random.Generator, r_c: int = 4, kernel: int = 3, stride: int = 1, padding: int = 0
    ) -> CNetParams:
        if r_c < 1 or d % r_c:
            raise ConfigurationError(f"r_c={r_c} must divide d={d}")
        conv4 = ConvTranspose1d.create(d, d, kernel, rng, stride, padding)
        return cls(conv4, Linear.create(d, d // r_c, rng), Linear.create(d // r_c, d, rng), d, n, r_c)


def cnet_forward(h: Tensor, params: CNetParams) -> tuple[Tensor, Tensor]:
    """Gate each channel row of ``h`` (``[d, n]`` or ``[B, d, n]``) by one scalar.

    Returns ``(h_mc, w_c)`` with ``h_mc[c] = h[c] * w_c[c]``.
    """
    if h.ndim < 2 or h.shape[-2:] != (params.d, params.n):
        raise DimensionError(f"cnet_forward input shape {h.shape} does not match d={params.d}, n={params.n}")
    expanded = params.conv4(h)
    w_c = excitation(F.global_avg_pool(expanded), params.fc6, params.fc5)
    return F.scale_channels(h, w_c), w_c
