"""Typicality signals read off the classifier itself.

Two per-sample signals, both functions of the frozen model's softmax
output at the true label Z = softmax(logits)[label]:

* internal probability: Z itself,
* internal entropy term: -Z * log(Z) (natural log), zero at the
  certainty limits Z -> 0 and Z = 1. This is the single true-label
  term, not the full-distribution entropy -sum_j Z_j log Z_j.

Snapshots are taken at epoch boundaries and stay constant within the
following epoch, so the within-epoch loss is a fixed objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ParameterError
from .losses import softmax
from .mlp import MlpModel, forward, forward_batch


def _entropy_term(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.zeros_like(z)
    inside = (z > 0.0) & (z < 1.0)
    out[inside] = -z[inside] * np.log(z[inside])
    return out


def internal_probability(model: MlpModel, x: np.ndarray, label: int) -> float:
    """Softmax probability of the true label under the current model."""
    if not 0 <= label < model.num_classes:
        raise ParameterError(f"label {label} outside [0, {model.num_classes})")
    return float(softmax(forward(model, x))[label])


def internal_entropy(model: MlpModel, x: np.ndarray, label: int) -> float:
    """-Z log Z for the true-label softmax probability Z."""
    z = internal_probability(model, x, label)
    return float(_entropy_term(np.array([z]))[0])


@dataclass
class InternalScoreTable:
    """Per-sample internal signals frozen at one epoch boundary."""

    epoch: int
    sample_ids: np.ndarray
    z_true: np.ndarray
    entropy: np.ndarray

    def __post_init__(self):
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.z_true = np.asarray(self.z_true, dtype=np.float64)
        self.entropy = np.asarray(self.entropy, dtype=np.float64)
        for arr in (self.sample_ids, self.z_true, self.entropy):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.sample_ids.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("sample_id,epoch,z_true,entropy\n")
            for sid, z, e in zip(self.sample_ids, self.z_true, self.entropy):
                fh.write(f"{int(sid)},{self.epoch},{float(z)!r},{float(e)!r}\n")


def snapshot_scores(model: MlpModel, train: Dataset, epoch: int) -> InternalScoreTable:
    """Full internal-score table with the model frozen as passed.

    ``epoch`` is the 1-based epoch the table is valid for; epoch 1
    snapshots the untrained (or externally initialized) model.
    """
    if epoch < 1:
        raise ParameterError("epoch must be >= 1")
    probs = softmax(forward_batch(model, train.features))
    z_true = probs[np.arange(len(train)), train.labels]
    return InternalScoreTable(
        epoch=epoch,
        sample_ids=train.sample_ids,
        z_true=z_true,
        entropy=_entropy_term(z_true),
    )
