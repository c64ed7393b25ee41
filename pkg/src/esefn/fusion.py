"""Two-modality fusion network, its three classifier heads and the min-branch loss."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import functional as F
from .attention import CNetParams, MNetParams, SEBlockParams, cnet_forward, mnet_forward, se_attention
from .errors import ConfigurationError, DimensionError, InputError
from .layers import MLP, Linear, named_parameters
from .tensor import Tensor, as_tensor, backward

N_MODALITIES = 2


class Branch(str, enum.Enum):
    RGB = "rgb"
    SKELETON = "skeleton"


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.7
    beta: float = 0.3

    def __post_init__(self):
        if self.beta < 0 or self.alpha <= self.beta:
            raise ConfigurationError(f"loss weights need alpha > beta >= 0, got alpha={self.alpha}, beta={self.beta}")


@dataclass
class LossBreakdown:
    l_r: float
    l_s: float
    l_rs: float
    l_total: float
    min_branch: Branch | None
    total: Tensor | None = field(default=None, repr=False, compare=False)


@dataclass
class EseFnParams:
    proj_r: MLP  # d1 -> d
    proj_s: MLP  # d2 -> d
    mnet: MNetParams | SEBlockParams | None
    cnet: CNetParams | SEBlockParams | None
    head_r: Linear  # d1 -> K
    head_s: Linear  # d2 -> K
    head_rs: Linear  # d -> K

    primary_head = "fused"

    def __post_init__(self):
        d, k = self.d, self.num_classes
        if self.proj_s.fc2.out_features != d:
            raise ConfigurationError(f"projections disagree on fused dim: {d} vs {self.proj_s.fc2.out_features}")
        if self.proj_r.fc1.in_features != self.head_r.in_features:
            raise ConfigurationError("RGB projection and RGB head disagree on d1")
        if self.proj_s.fc1.in_features != self.head_s.in_features:
            raise ConfigurationError("skeleton projection and skeleton head disagree on d2")
        if self.head_rs.in_features != d or {self.head_r.out_features, self.head_s.out_features} != {k}:
            raise ConfigurationError("classifier heads disagree on shapes")
        if k < 2:
            raise ConfigurationError(f"need at least 2 classes, got K={k}")
        if isinstance(self.mnet, MNetParams) and (self.mnet.n, self.mnet.d) != (N_MODALITIES, d):
            raise ConfigurationError(f"M-Net built for n={self.mnet.n}, d={self.mnet.d}; pipeline has n=2, d={d}")
        if isinstance(self.mnet, SEBlockParams) and self.mnet.channels != N_MODALITIES:
            raise ConfigurationError(f"modal SE block has C={self.mnet.channels}, expected n=2")
        if isinstance(self.cnet, CNetParams) and (self.cnet.d, self.cnet.n) != (d, N_MODALITIES):
            raise ConfigurationError(f"C-Net built for d={self.cnet.d}, n={self.cnet.n}; pipeline has d={d}, n=2")
        if isinstance(self.cnet, SEBlockParams) and self.cnet.channels != d:
            raise ConfigurationError(f"channel SE block has C={self.cnet.channels}, expected d={d}")

    @property
    def n(self) -> int:
        return N_MODALITIES

    @property
    def d(self) -> int:
        return self.proj_r.fc2.out_features

    @property
    def num_classes(self) -> int:
        return self.head_rs.out_features

    @property
    def input_dims(self) -> tuple[int, int]:
        return self.head_r.in_features, self.head_s.in_features

    @classmethod
    def create(
        cls,
        d1: int,
        d2: int,
        d: int,
        num_classes: int,
        rng: np.random.Generator,
        modal: str | None = "ese",
        channel: str | None = "ese",
        r_m: int = 2,
        r_c: int = 4,
        se_reduction: int = 2,
    ) -> EseFnParams:
        """Build a randomly initialised network.

        ``modal`` / ``channel`` pick the block at each fusion site: ``"ese"``
        (M-Net / C-Net), ``"se"`` (plain squeeze-excitation) or ``None``.
        """
        n = N_MODALITIES
        proj_r = MLP.create(d1, d, d, rng)
        proj_s = MLP.create(d2, d, d, rng)
        if modal == "ese":
            mnet = MNetParams.create(n, d, rng, r_m=r_m)
        elif modal == "se":
            mnet = SEBlockParams.create(n, se_reduction, rng)
        elif modal is None:
            mnet = None
        else:
            raise ConfigurationError(f"unknown modal block {modal!r}")
        if channel == "ese":
            cnet = CNetParams.create(d, n, rng, r_c=r_c)
        elif channel == "se":
            cnet = SEBlockParams.create(d, se_reduction, rng)
        elif channel is None:
            cnet = None
        else:
            raise ConfigurationError(f"unknown channel block {channel!r}")
        heads = [Linear.create(dim, num_classes, rng) for dim in (d1, d2, d)]
        return cls(proj_r, proj_s, mnet, cnet, *heads)

    def named_parameters(self):
        return list(named_parameters(self))

    def objective(self, f_r, f_s, labels, weights: LossWeights) -> LossBreakdown:
        logits_r, logits_s, logits_rs = predict(f_r, f_s, self)
        return multimodal_loss(
            F.softmax_cross_entropy(logits_r, labels).mean(),
            F.softmax_cross_entropy(logits_s, labels).mean(),
            F.softmax_cross_entropy(logits_rs, labels).mean(),
            weights,
        )

    def logits(self, f_r, f_s) -> dict[str, np.ndarray]:
        logits_r, logits_s, logits_rs = predict(f_r, f_s, self)
        return {"rgb": logits_r.data, "skeleton": logits_s.data, "fused": logits_rs.data}


def _check_inputs(f_r: Tensor, f_s: Tensor, params: EseFnParams) -> None:
    d1, d2 = params.input_dims
    if f_r.ndim not in (1, 2) or f_r.shape[-1] != d1:
        raise InputError(f"RGB feature shape {f_r.shape} does not match d1={d1}")
    if f_s.ndim not in (1, 2) or f_s.shape[-1] != d2:
        raise InputError(f"skeleton feature shape {f_s.shape} does not match d2={d2}")
    if f_r.shape[:-1] != f_s.shape[:-1]:
        raise InputError(f"RGB batch {f_r.shape} and skeleton batch {f_s.shape} differ")


def _apply_modal(f: Tensor, block) -> tuple[Tensor, Tensor | None]:
    if block is None:
        return f, None
    if isinstance(block, MNetParams):
        return mnet_forward(f, block)
    return se_attention(f, block)


def _apply_channel(h: Tensor, block) -> tuple[Tensor, Tensor | None]:
    if block is None:
        return h, None
    if isinstance(block, CNetParams):
        return cnet_forward(h, block)
    return se_attention(h, block)


def fuse_forward(f_r, f_s, params: EseFnParams) -> tuple[Tensor, Tensor | None, Tensor | None]:
    """Fuse one sample (``[d1]``, ``[d2]``) or a batch (``[B, d1]``, ``[B, d2]``) into ``f_rs`` of size ``d``.

    Returns ``(f_rs, w_m, w_c)``; a gate is ``None`` when its block is absent.
    """
    f_r, f_s = as_tensor(f_r), as_tensor(f_s)
    _check_inputs(f_r, f_s, params)
    f = F.stack([params.proj_r(f_r), params.proj_s(f_s)], axis=-1)  # [.., d, n]
    h_m, w_m = _apply_modal(F.transpose(f), params.mnet)  # [.., n, d]
    h_mc, w_c = _apply_channel(F.transpose(h_m), params.cnet)  # [.., d, n]
    return h_mc.sum(axis=-1), w_m, w_c


def predict(f_r, f_s, params: EseFnParams) -> tuple[Tensor, Tensor, Tensor]:
    """Logits of the RGB, skeleton and fused heads; single-modal heads see the raw features."""
    f_r, f_s = as_tensor(f_r), as_tensor(f_s)
    f_rs, _, _ = fuse_forward(f_r, f_s, params)
    return params.head_r(f_r), params.head_s(f_s), params.head_rs(f_rs)


def _value(x) -> float:
    return x.item() if isinstance(x, Tensor) else float(x)


def multimodal_loss(l_r, l_s, l_rs, weights: LossWeights) -> LossBreakdown:
    """``alpha * l_rs + beta * (min(l_r, l_s) - l_rs)``.

    Inputs may be floats or scalar tensors; with tensors, ``total`` carries the
    differentiable result. Only the smaller single-modal loss enters the graph
    (ties go to RGB).
    """
    if not isinstance(weights, LossWeights):
        raise ConfigurationError("weights must be a LossWeights instance")
    vr, vs, vrs = _value(l_r), _value(l_s), _value(l_rs)
    if min(vr, vs, vrs) < 0:
        raise InputError(f"losses must be non-negative, got {vr}, {vs}, {vrs}")
    branch = Branch.RGB if vr <= vs else Branch.SKELETON
    chosen, v_min = (l_r, vr) if branch is Branch.RGB else (l_s, vs)
    l_total = weights.alpha * vrs + weights.beta * (v_min - vrs)
    total = None
    if any(isinstance(x, Tensor) for x in (chosen, l_rs)):
        total = as_tensor(l_rs) * weights.alpha + (as_tensor(chosen) - l_rs) * weights.beta
    return LossBreakdown(vr, vs, vrs, l_total, branch, total)


def stack_batch(batch: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arrays ``(f_r [B, d1], f_s [B, d2], labels [B])`` from feature records."""
    if len(batch) == 0:
        raise InputError("empty batch")
    f_r = np.stack([np.asarray(s.f_r, dtype=np.float64) for s in batch])
    f_s = np.stack([np.asarray(s.f_s, dtype=np.float64) for s in batch])
    labels = np.array([s.label for s in batch], dtype=np.int64)
    return f_r, f_s, labels


def batch_loss(batch: Sequence, params, weights: LossWeights) -> LossBreakdown:
    """Batch-mean losses for ``batch`` with one backward pass into the parameter grads."""
    f_r, f_s, labels = stack_batch(batch)
    d1, d2 = params.input_dims
    if f_r.shape[1] != d1 or f_s.shape[1] != d2:
        raise DimensionError(f"batch dims ({f_r.shape[1]}, {f_s.shape[1]}) do not match model ({d1}, {d2})")
    out = params.objective(f_r, f_s, labels, weights)
    backward(out.total)
    return out
