"""Experiment drivers shared by the CLI and the scripts in ``scripts/``."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ablation import AblationVariant, build_model, loss_weights_for
from .data import MultiModalFeature
from .errors import InputError
from .fusion import EseFnParams, LossWeights
from .gradcheck import check_gradients
from .trainer import OptimConfig, TrainReport, train

DEFAULT_ALPHAS = (0.3, 0.5, 0.7, 0.9)
DEFAULT_BETAS = (0.0, 0.3, 0.6, 0.9)


@dataclass
class Dataset:
    train: list[MultiModalFeature]
    test: list[MultiModalFeature]
    num_classes: int

    @property
    def dims(self) -> tuple[int, int]:
        if not self.train:
            raise InputError("empty training set")
        return len(self.train[0].f_r), len(self.train[0].f_s)


def train_esefn(data: Dataset, d: int, optim: OptimConfig, weights: LossWeights) -> tuple[EseFnParams, TrainReport]:
    d1, d2 = data.dims
    model = EseFnParams.create(d1, d2, d, data.num_classes, np.random.default_rng(optim.seed))
    return model, train(model, data.train, data.test, optim, weights)


@dataclass
class AblationRow:
    variant: AblationVariant
    test_acc: float
    report: TrainReport


def run_ablation(
    data: Dataset, variants: Sequence[AblationVariant], d: int, optim: OptimConfig, weights: LossWeights
) -> list[AblationRow]:
    """Train each variant from the same seed; accuracy is taken from the variant's primary head."""
    d1, d2 = data.dims
    rows = []
    for variant in variants:
        model = build_model(variant, d1, d2, d, data.num_classes, np.random.default_rng(optim.seed))
        report = train(model, data.train, data.test, optim, loss_weights_for(variant, weights))
        rows.append(AblationRow(variant, report.test_accuracy[model.primary_head], report))
    return rows


ABLATION_HEADER = ("variant", "rgb", "skeleton", "mnet", "cnet", "ml", "expansion", "test_acc")


def ablation_csv(rows: Sequence[AblationRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ABLATION_HEADER)
    for r in rows:
        v = r.variant
        flags = (v.uses_rgb, v.uses_skeleton, v.uses_mnet, v.uses_cnet, v.uses_ml, v.uses_expansion)
        w.writerow([v.id, *(int(f) for f in flags), repr(r.test_acc)])
    return buf.getvalue()


@dataclass
class SweepCell:
    alpha: float
    beta: float
    test_acc: float | None  # None when alpha <= beta
    report: TrainReport | None = None

    @property
    def skipped(self) -> bool:
        return self.test_acc is None


def run_sweep(
    data: Dataset,
    d: int,
    optim: OptimConfig,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    betas: Sequence[float] = DEFAULT_BETAS,
) -> list[SweepCell]:
    cells = []
    for alpha in alphas:
        for beta in betas:
            if alpha <= beta:
                cells.append(SweepCell(alpha, beta, None))
                continue
            _, report = train_esefn(data, d, optim, LossWeights(alpha, beta))
            cells.append(SweepCell(alpha, beta, report.test_accuracy["fused"], report))
    return cells


def sweep_csv(cells: Sequence[SweepCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("alpha", "beta", "status", "test_acc"))
    for c in cells:
        if c.skipped:
            w.writerow([repr(c.alpha), repr(c.beta), "skipped", ""])
        else:
            w.writerow([repr(c.alpha), repr(c.beta), "ok", repr(c.test_acc)])
    return buf.getvalue()


def gradcheck_model(
    d: int = 16, num_classes: int = 4, batch: int = 4, d1: int = 10, d2: int = 12, seed: int = 0, eps: float = 1e-6
) -> dict[str, float]:
    """Per-group relative error of backward vs. finite differences on a random full model and batch."""
    rng = np.random.default_rng(seed)
    model = EseFnParams.create(d1, d2, d, num_classes, rng)
    # random biases so no pre-activation sits exactly on a relu kink
    for name, p in model.named_parameters():
        if name.endswith("bias"):
            p.data[...] = rng.normal(0.0, 0.1, size=p.shape)
    f_r = rng.normal(size=(batch, d1))
    f_s = rng.normal(size=(batch, d2))
    labels = rng.integers(0, num_classes, size=batch)
    weights = LossWeights()
    return check_gradients(lambda: model.objective(f_r, f_s, labels, weights).total, model.named_parameters(), eps)
