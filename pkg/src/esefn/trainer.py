"""Mini-batch SGD with momentum and coupled weight decay, plus the training loop."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import MultiModalFeature
from .errors import ConfigurationError, InputError, UsageError
from .fusion import LossWeights, stack_batch
from .tensor import Tensor, backward

log = logging.getLogger(__name__)

REPORT_HEADER = ("epoch", "l_total", "l_r", "l_s", "l_rs", "train_acc")


@dataclass(frozen=True)
class OptimConfig:
    learning_rate: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    # step decay: multiply the rate by lr_decay_factor at each listed epoch (off when empty)
    lr_decay_epochs: tuple[int, ...] = ()
    lr_decay_factor: float = 0.1

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be unsigned, got {self.seed}")

    def rate_at(self, epoch: int) -> float:
        """Learning rate for a 1-based epoch."""
        drops = sum(1 for e in self.lr_decay_epochs if epoch >= e)
        return self.learning_rate * self.lr_decay_factor**drops


class SGD:
    """``v <- momentum * v + grad + decay * p``; ``p <- p - lr * v``; grads are zeroed afterwards."""

    def __init__(self, named_params: Sequence[tuple[str, Tensor]], config: OptimConfig):
        self.params = list(named_params)
        self.config = config
        self.lr = config.learning_rate
        self.velocity = {name: np.zeros_like(p.data) for name, p in self.params}

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()

    def step(self) -> None:
        cfg = self.config
        for name, p in self.params:
            if p.grad is None:
                raise UsageError(f"parameter {name} has no gradient buffer")
        for name, p in self.params:
            v = self.velocity[name]
            v *= cfg.momentum
            v += p.grad
            if cfg.weight_decay:
                v += cfg.weight_decay * p.data
            p.data -= self.lr * v
        self.zero_grad()


def sgd_step(optimizer: SGD) -> None:
    optimizer.step()


@dataclass
class EpochStats:
    epoch: int
    l_total: float
    l_r: float
    l_s: float
    l_rs: float
    train_acc: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    test_accuracy: dict[str, float] = field(default_factory=dict)

    def column(self, name: str) -> list[float]:
        return [getattr(e, name) for e in self.epochs]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for e in self.epochs:
            writer.writerow([e.epoch, *(repr(getattr(e, k)) for k in REPORT_HEADER[1:])])
        return buf.getvalue()


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of argmax hits; ties resolve to the lowest class index."""
    return float(np.mean(np.argmax(logits, axis=-1) == labels))


def evaluate(model, samples: Sequence[MultiModalFeature]) -> dict[str, float]:
    """Accuracy of every head the model exposes."""
    f_r, f_s, labels = stack_batch(samples)
    return {head: accuracy(logits, labels) for head, logits in model.logits(f_r, f_s).items()}


def _check_dims(model, samples: Sequence[MultiModalFeature], which: str) -> None:
    d1, d2 = model.input_dims
    for s in samples:
        if len(s.f_r) != d1 or len(s.f_s) != d2:
            raise InputError(
                f"{which} sample {s.sample_id} has dims ({len(s.f_r)}, {len(s.f_s)}), model expects ({d1}, {d2})"
            )


def train(
    model,
    train_data: Sequence[MultiModalFeature],
    test_data: Sequence[MultiModalFeature],
    optim: OptimConfig,
    loss_weights: LossWeights | None = None,
) -> TrainReport:
    """Fit ``model`` in place and return per-epoch statistics plus final test accuracy per head.

    Epoch losses are sample-weighted means of the mini-batch losses seen
    during the epoch; ``train_acc`` is the primary head's accuracy on the
    full training set after the epoch.
    """
    if not train_data:
        raise InputError("empty training set")
    _check_dims(model, train_data, "training")
    _check_dims(model, test_data, "test")
    loss_weights = loss_weights or LossWeights()
    f_r, f_s, labels = stack_batch(train_data)
    rng = np.random.default_rng(optim.seed)
    opt = SGD(model.named_parameters(), optim)
    opt.zero_grad()
    report = TrainReport()
    n = len(train_data)
    for epoch in range(1, optim.epochs + 1):
        opt.lr = optim.rate_at(epoch)
        order = rng.permutation(n)
        sums = np.zeros(4)
        for start in range(0, n, optim.batch_size):
            idx = order[start : start + optim.batch_size]
            out = model.objective(f_r[idx], f_s[idx], labels[idx], loss_weights)
            backward(out.total)
            opt.step()
            sums += len(idx) * np.array([out.l_total, out.l_r, out.l_s, out.l_rs])
        means = sums / n
        train_acc = accuracy(model.logits(f_r, f_s)[model.primary_head], labels)
        report.epochs.append(EpochStats(epoch, *(float(x) for x in means), train_acc))
        log.debug("epoch %d l_total=%.5f train_acc=%.4f", epoch, means[0], train_acc)
    if test_data:
        report.test_accuracy = evaluate(model, test_data)
    return report
