"""Component-ablation variants: which modalities, fusion blocks and loss each one uses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import ConcatClassifier, SingleModalClassifier
from .errors import ConfigurationError
from .fusion import Branch, EseFnParams, LossWeights

PLAIN_LOSS = LossWeights(alpha=1.0, beta=0.0)


@dataclass(frozen=True)
class AblationVariant:
    id: str
    uses_rgb: bool
    uses_skeleton: bool
    uses_mnet: bool  # modal-wise fusion present
    uses_cnet: bool  # channel-wise fusion present
    uses_ml: bool
    uses_expansion: bool  # ESE blocks when set, plain SE blocks otherwise

    @property
    def modal_block(self) -> str | None:
        if not self.uses_mnet:
            return None
        return "ese" if self.uses_expansion else "se"

    @property
    def channel_block(self) -> str | None:
        if not self.uses_cnet:
            return None
        return "ese" if self.uses_expansion else "se"

    @property
    def is_single_modal(self) -> bool:
        return self.uses_rgb != self.uses_skeleton


def _v(id, rgb, skel, mnet, cnet, ml, exp):
    return AblationVariant(id, rgb, skel, mnet, cnet, ml, exp)


# row order of the component table, then the SE-vs-ESE table
VARIANTS: dict[str, AblationVariant] = {
    v.id: v
    for v in (
        _v("B1", True, False, False, False, False, False),
        _v("B2", False, True, False, False, False, False),
        _v("B3", True, True, False, False, False, False),
        _v("B4", True, True, True, False, True, True),
        _v("B5", True, True, False, True, True, True),
        _v("B6", True, True, True, True, False, True),
        _v("B7", True, True, True, True, True, True),
        _v("A1", True, True, False, True, True, False),
        _v("A2", True, True, True, False, True, False),
        _v("A3", True, True, True, True, True, False),
        _v("A4", True, True, False, True, True, True),
        _v("A5", True, True, True, False, True, True),
        _v("A6", True, True, True, True, True, True),
    )
}


def parse_variants(text: str) -> list[AblationVariant]:
    ids = [part.strip().upper() for part in text.split(",") if part.strip()]
    unknown = [i for i in ids if i not in VARIANTS]
    if unknown or not ids:
        raise ConfigurationError(f"unknown ablation variants {unknown or text!r}; choose from {','.join(VARIANTS)}")
    order = list(VARIANTS)
    return [VARIANTS[i] for i in sorted(set(ids), key=order.index)]


def build_model(
    variant: AblationVariant, d1: int, d2: int, d: int, num_classes: int, rng: np.random.Generator
):
    if variant.is_single_modal:
        branch = Branch.RGB if variant.uses_rgb else Branch.SKELETON
        return SingleModalClassifier.create(branch, d1, d2, num_classes, rng)
    if not (variant.uses_mnet or variant.uses_cnet):
        return ConcatClassifier.create(d1, d2, d, num_classes, rng)
    return EseFnParams.create(d1, d2, d, num_classes, rng, modal=variant.modal_block, channel=variant.channel_block)


def loss_weights_for(variant: AblationVariant, default: LossWeights) -> LossWeights:
    return default if variant.uses_ml else PLAIN_LOSS
