"""Non-attentive reference classifiers used in the ablation table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import functional as F
from .fusion import Branch, LossBreakdown, LossWeights
from .layers import MLP, Linear, named_parameters
from .tensor import as_tensor

NAN = float("nan")


@dataclass
class SingleModalClassifier:
    """Softmax classifier on the raw features of one modality."""

    head: Linear
    modality: Branch
    other_dim: int

    @classmethod
    def create(cls, modality: Branch, d1: int, d2: int, num_classes: int, rng: np.random.Generator):
        own, other = (d1, d2) if modality is Branch.RGB else (d2, d1)
        return cls(Linear.create(own, num_classes, rng), modality, other)

    @property
    def primary_head(self) -> str:
        return self.modality.value

    @property
    def input_dims(self) -> tuple[int, int]:
        own = self.head.in_features
        return (own, self.other_dim) if self.modality is Branch.RGB else (self.other_dim, own)

    def named_parameters(self):
        return list(named_parameters(self))

    def _own(self, f_r, f_s):
        return as_tensor(f_r if self.modality is Branch.RGB else f_s)

    def objective(self, f_r, f_s, labels, weights: LossWeights | None = None) -> LossBreakdown:
        loss = F.softmax_cross_entropy(self.head(self._own(f_r, f_s)), labels).mean()
        v = loss.item()
        if self.modality is Branch.RGB:
            return LossBreakdown(v, NAN, NAN, v, None, loss)
        return LossBreakdown(NAN, v, NAN, v, None, loss)

    def logits(self, f_r, f_s) -> dict[str, np.ndarray]:
        return {self.primary_head: self.head(self._own(f_r, f_s)).data}


@dataclass
class ConcatClassifier:
    """Projected features concatenated into one softmax head, no attention."""

    proj_r: MLP
    proj_s: MLP
    head: Linear  # 2d -> K

    primary_head = "fused"

    @classmethod
    def create(cls, d1: int, d2: int, d: int, num_classes: int, rng: np.random.Generator):
        proj_r, proj_s = MLP.create(d1, d, d, rng), MLP.create(d2, d, d, rng)
        return cls(proj_r, proj_s, Linear.create(2 * d, num_classes, rng))

    @property
    def input_dims(self) -> tuple[int, int]:
        return self.proj_r.fc1.in_features, self.proj_s.fc1.in_features

    def named_parameters(self):
        return list(named_parameters(self))

    def _logits(self, f_r, f_s):
        joined = F.concat([self.proj_r(as_tensor(f_r)), self.proj_s(as_tensor(f_s))], axis=-1)
        return self.head(joined)

    def objective(self, f_r, f_s, labels, weights: LossWeights | None = None) -> LossBreakdown:
        loss = F.softmax_cross_entropy(self._logits(f_r, f_s), labels).mean()
        v = loss.item()
        return LossBreakdown(NAN, NAN, v, v, None, loss)

    def logits(self, f_r, f_s) -> dict[str, np.ndarray]:
        return {"fused": self._logits(f_r, f_s).data}
