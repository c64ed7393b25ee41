"""Paired two-modality feature records: synthetic generation and CSV file I/O."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, PairingError, ParseError

HEADER_RE = re.compile(r"^#esef v1 dim=(\d+) classes=(\d+)$")


@dataclass(eq=False)
class MultiModalFeature:
    sample_id: int
    label: int
    f_r: np.ndarray
    f_s: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, MultiModalFeature):
            return NotImplemented
        return (
            self.sample_id == other.sample_id
            and self.label == other.label
            and np.array_equal(self.f_r, other.f_r)
            and np.array_equal(self.f_s, other.f_s)
        )


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 4
    d1: int = 8
    d2: int = 8
    noise_sigma: float = 0.1
    samples_per_class: int = 100
    seed: int = 7
    factors: tuple[int, int] | None = None  # (A, B); derived from num_classes when omitted

    def latent_factors(self) -> tuple[int, int]:
        if self.factors is not None:
            a, b = self.factors
            if a * b != self.num_classes:
                raise InputError(f"factors {self.factors} do not multiply to K={self.num_classes}")
        else:
            a = next((f for f in range(2, self.num_classes) if self.num_classes % f == 0), 0)
            b = self.num_classes // a if a else 0
        if a < 2 or b < 2:
            raise InputError(f"K={self.num_classes} must factor as A*B with A, B >= 2")
        return a, b

    def validate(self) -> tuple[int, int]:
        a, b = self.latent_factors()
        if a > self.d1 or b > self.d2:
            raise InputError(f"one-hot prototypes need d1 >= A and d2 >= B, got d1={self.d1}, d2={self.d2}, A={a}, B={b}")
        if self.noise_sigma < 0 or not math.isfinite(self.noise_sigma):
            raise InputError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma}")
        if self.samples_per_class < 1:
            raise InputError(f"samples_per_class must be >= 1, got {self.samples_per_class}")
        return a, b


def prototype_scale(noise_sigma: float) -> float:
    # one-hot prototypes are sqrt(2)*scale apart; keep that >= 4 sigma and never collapse at sigma = 0
    return max(1.0, 4.0 * noise_sigma / math.sqrt(2.0))


def generate_xor_pair(spec: SynthSpec) -> list[MultiModalFeature]:
    """Samples whose label ``z_A * B + z_B`` needs both modalities.

    The RGB features carry only ``z_A`` and the skeleton features only
    ``z_B``, each as a one-hot prototype plus isotropic gaussian noise.
    """
    a, b = spec.validate()
    rng = np.random.default_rng(spec.seed)
    scale = prototype_scale(spec.noise_sigma)
    proto_r = scale * np.eye(a, spec.d1)
    proto_s = scale * np.eye(b, spec.d2)
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    labels = labels[rng.permutation(labels.size)]
    noise_r = rng.normal(0.0, 1.0, size=(labels.size, spec.d1)) * spec.noise_sigma
    noise_s = rng.normal(0.0, 1.0, size=(labels.size, spec.d2)) * spec.noise_sigma
    return [
        MultiModalFeature(i, int(y), proto_r[y // b] + noise_r[i], proto_s[y % b] + noise_s[i])
        for i, y in enumerate(labels)
    ]


def train_test_split(
    samples: Sequence[MultiModalFeature], test_fraction: float = 0.25, seed: int = 0
) -> tuple[list[MultiModalFeature], list[MultiModalFeature]]:
    """Per-class split; each class contributes ``round(test_fraction * count)`` test samples."""
    if not 0 < test_fraction < 1:
        raise InputError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx: set[int] = set()
    labels = np.array([s.label for s in samples])
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        n_test = int(round(test_fraction * members.size))
        test_idx.update(rng.permutation(members)[:n_test].tolist())
    train = [s for i, s in enumerate(samples) if i not in test_idx]
    test = [s for i, s in enumerate(samples) if i in test_idx]
    return train, test


def _format_row(sample_id: int, label: int, values: np.ndarray) -> str:
    return ",".join([str(sample_id), str(label), *("%.17g" % v for v in values)])


def write_features(
    rgb_path: str | Path, skel_path: str | Path, samples: Sequence[MultiModalFeature], num_classes: int
) -> None:
    """One file per modality: a ``#esef v1`` header then ``sample_id,label,x1,...,xD`` rows."""
    if not samples:
        raise InputError("no samples to write")
    for path, attr in ((rgb_path, "f_r"), (skel_path, "f_s")):
        dim = len(getattr(samples[0], attr))
        lines = [f"#esef v1 dim={dim} classes={num_classes}"]
        for s in samples:
            values = np.asarray(getattr(s, attr), dtype=np.float64)
            if values.shape != (dim,):
                raise InputError(f"sample {s.sample_id} has {attr} of shape {values.shape}, expected ({dim},)")
            lines.append(_format_row(s.sample_id, s.label, values))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


@dataclass
class FeatureFile:
    dim: int
    num_classes: int
    ids: list[int]
    labels: list[int]
    values: np.ndarray  # [N, dim]


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", line) from None
    if value < 0:
        raise ParseError(f"{what} {value} is negative", line)
    return value


def parse_feature_file(path: str | Path) -> FeatureFile:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("missing header", 1)
    match = HEADER_RE.match(lines[0])
    if not match:
        raise ParseError(f"malformed header {lines[0]!r}", 1)
    dim, num_classes = int(match.group(1)), int(match.group(2))
    if dim < 1 or num_classes < 2:
        raise ParseError(f"header needs dim >= 1 and classes >= 2, got dim={dim} classes={num_classes}", 1)
    ids, labels, rows = [], [], []
    for lineno, text in enumerate(lines[1:], start=2):
        fields = text.split(",")
        if len(fields) != dim + 2:
            raise ParseError(f"expected {dim} features, found {len(fields) - 2}", lineno)
        sample_id = _parse_int(fields[0], "sample_id", lineno)
        label = _parse_int(fields[1], "label", lineno)
        if label >= num_classes:
            raise ParseError(f"label {label} is out of range for {num_classes} classes", lineno)
        try:
            row = [float(x) for x in fields[2:]]
        except ValueError:
            raise ParseError("non-numeric feature value", lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise ParseError("non-finite feature value", lineno)
        ids.append(sample_id)
        labels.append(label)
        rows.append(row)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return FeatureFile(dim, num_classes, ids, labels, values)


def read_features(rgb_path: str | Path, skel_path: str | Path) -> list[MultiModalFeature]:
    return load_feature_set(rgb_path, skel_path)[0]


def load_feature_set(rgb_path: str | Path, skel_path: str | Path) -> tuple[list[MultiModalFeature], int]:
    """Paired samples plus the class count declared in the headers."""
    rgb, skel = parse_feature_file(rgb_path), parse_feature_file(skel_path)
    if rgb.num_classes != skel.num_classes:
        raise PairingError(f"class counts differ: {rgb.num_classes} vs {skel.num_classes}")
    for row, (id_r, id_s) in enumerate(zip(rgb.ids, skel.ids)):
        if id_r != id_s:
            raise PairingError(f"sample id {id_r} in RGB row {row + 1} is paired with skeleton id {id_s}")
        if rgb.labels[row] != skel.labels[row]:
            raise PairingError(f"sample id {id_r} has label {rgb.labels[row]} vs {skel.labels[row]}")
    if len(rgb.ids) != len(skel.ids):
        longer = rgb if len(rgb.ids) > len(skel.ids) else skel
        raise PairingError(f"sample id {longer.ids[min(len(rgb.ids), len(skel.ids))]} has no partner")
    samples = [
        MultiModalFeature(i, y, rgb.values[k].copy(), skel.values[k].copy())
        for k, (i, y) in enumerate(zip(rgb.ids, rgb.labels))
    ]
    return samples, rgb.num_classes
