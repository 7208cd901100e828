"""Small feed-forward classifier trained by minibatch SGD on weighted losses.

Layers are affine maps with relu or identity activations; the final
layer always emits raw logits. A per-layer freeze mask supports the
fine-tuning-depth experiments: frozen layers are never touched by a
training step. Plain SGD, no momentum or weight decay; the batch loss
is a SUM over samples, so the default learning rate is specified
per-sum.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import InsufficientDataError, ParameterError, TrainingDivergedError
from .losses import LOSS_KINDS, batch_loss

ACTIVATIONS = ("relu", "identity")


@dataclass
class Layer:
    weights: np.ndarray      # (fan_in, fan_out)
    bias: np.ndarray         # (fan_out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"activation must be one of {ACTIVATIONS}")


@dataclass
class MlpModel:
    layers: list[Layer]
    freeze_mask: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ParameterError("model needs at least one layer")
        if not self.freeze_mask:
            self.freeze_mask = [False] * len(self.layers)
        if len(self.freeze_mask) != len(self.layers):
            raise ParameterError("freeze_mask length must match layer count")
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if a.weights.shape[1] != b.weights.shape[0]:
                raise ParameterError(
                    f"layer dimensions do not compose: {a.weights.shape} -> {b.weights.shape}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weights.shape[1]

    def clone(self) -> "MlpModel":
        return copy.deepcopy(self)


def init_model(layer_sizes: Sequence[int], num_classes: int, seed: int = 0,
               freeze_mask: Sequence[bool] | None = None) -> MlpModel:
    """Build a model with Glorot-uniform weights and zero biases.

    ``layer_sizes`` runs input -> hidden... -> output; the last entry
    must equal ``num_classes``. Deterministic per seed.
    """
    sizes = list(layer_sizes)
    if len(sizes) < 2:
        raise ParameterError("layer_sizes needs at least (input, output)")
    if sizes[-1] != num_classes:
        raise ParameterError(
            f"last layer size {sizes[-1]} must equal num_classes {num_classes}"
        )
    rng = np.random.default_rng(seed)
    layers = []
    for li, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        act = "identity" if li == len(sizes) - 2 else "relu"
        layers.append(Layer(weights=w, bias=np.zeros(fan_out), activation=act))
    return MlpModel(layers=layers,
                    freeze_mask=list(freeze_mask) if freeze_mask is not None else [])


def forward_batch(m: MlpModel, x: np.ndarray) -> np.ndarray:
    """Logits for an (N, D) block; the last layer has no nonlinearity."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.input_dim:
        raise ParameterError(f"input dim {x.shape[-1]} does not match model dim {m.input_dim}")
    h = x
    for layer in m.layers:
        h = h @ layer.weights + layer.bias
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
    return h


def forward(m: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("forward takes a single feature vector")
    return forward_batch(m, x[None, :])[0]


def _forward_cached(m: MlpModel, x: np.ndarray):
    """Forward pass keeping pre-activations for backprop."""
    pre = []
    h = x
    inputs = [x]
    for layer in m.layers:
        a = h @ layer.weights + layer.bias
        pre.append(a)
        h = np.maximum(a, 0.0) if layer.activation == "relu" else a
        inputs.append(h)
    return inputs, pre


def backprop(m: MlpModel, x: np.ndarray, dlogits: np.ndarray):
    """Parameter gradients given dLoss/dlogits for a batch.

    Returns a list of (dW, db) per layer. The relu derivative at 0 is 0.
    """
    x = np.asarray(x, dtype=np.float64)
    inputs, pre = _forward_cached(m, x)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(m.layers)
    delta = np.asarray(dlogits, dtype=np.float64)
    for li in range(len(m.layers) - 1, -1, -1):
        layer = m.layers[li]
        gw = inputs[li].T @ delta
        gb = delta.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            delta = delta @ layer.weights.T
            prev = m.layers[li - 1]
            if prev.activation == "relu":
                delta = delta * (pre[li - 1] > 0.0)
    return grads


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float | None = None   # None -> 1e-2 / sqrt(batch_size), per-sum step
    batch_size: int = 32
    epochs: int = 10
    loss_kind: str = "ms_hinge"
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ParameterError("batch_size and epochs must be positive")
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", 1e-2 / float(np.sqrt(self.batch_size)))
        if self.learning_rate < 0:
            raise ParameterError("learning_rate must be >= 0")
        if self.loss_kind not in LOSS_KINDS:
            raise ParameterError(f"loss_kind must be one of {LOSS_KINDS}")


@dataclass(frozen=True)
class EvalResult:
    macro_accuracy: float          # unweighted mean of per-class accuracies
    overall_accuracy: float
    per_class: np.ndarray


def evaluate(m: MlpModel, d: Dataset) -> EvalResult:
    """Argmax accuracy (ties to the lowest class index)."""
    if len(d) == 0:
        raise InsufficientDataError("cannot evaluate on an empty split")
    if d.num_classes != m.num_classes:
        raise ParameterError("dataset num_classes does not match the model")
    pred = np.argmax(forward_batch(m, d.features), axis=1)
    correct = pred == d.labels
    per_class = np.full(d.num_classes, np.nan)
    present = np.unique(d.labels)
    for c in present:
        mask = d.labels == c
        per_class[c] = float(correct[mask].mean())
    macro = float(np.nanmean(per_class[present]))
    return EvalResult(macro_accuracy=macro,
                      overall_accuracy=float(correct.mean()),
                      per_class=per_class)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    eval_metrics: dict        # split name -> {"macro": .., "overall": ..}


@dataclass
class TrainHistory:
    epochs: list[EpochRecord] = field(default_factory=list)
    weight_tables: list = field(default_factory=list)   # populated on request

    def to_jsonl(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for rec in self.epochs:
                fh.write(json.dumps({
                    "epoch": rec.epoch,
                    "train_loss": rec.train_loss,
                    "eval": rec.eval_metrics,
                }) + "\n")


def train(
    m: MlpModel,
    d: Dataset,
    cfg: TrainConfig,
    schedule=None,
    eval_splits: dict[str, Dataset] | None = None,
    keep_weight_tables: bool = False,
) -> tuple[MlpModel, TrainHistory]:
    """Minibatch SGD on the weighted loss; the model is updated in place.

    ``schedule`` supplies the per-sample weight table in force for each
    epoch (see weighting.WeightSchedule); None trains with uniform
    weights. Weight tables refresh only at epoch boundaries. Fully
    deterministic given the config seed.
    """
    if d.num_classes != m.num_classes:
        raise ParameterError("dataset num_classes does not match the model")
    x_all = d.features
    y_all = d.labels
    n = len(d)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()

    for epoch in range(1, cfg.epochs + 1):
        if schedule is not None:
            table = schedule.table_for_epoch(epoch, m)
            taus = table.weights
            if keep_weight_tables:
                history.weight_tables.append(table)
        else:
            taus = np.ones(n)
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            logits = forward_batch(m, x_all[idx])
            if not np.isfinite(logits).all():
                raise TrainingDivergedError(epoch, bi, "non-finite logits")
            lv, dz = batch_loss(cfg.loss_kind, logits, y_all[idx], taus[idx],
                                sample_ids=d.sample_ids[idx])
            if not np.isfinite(lv.total):
                raise TrainingDivergedError(epoch, bi)
            grads = backprop(m, x_all[idx], dz)
            for layer, frozen, (gw, gb) in zip(m.layers, m.freeze_mask, grads):
                if not frozen:
                    layer.weights -= cfg.learning_rate * gw
                    layer.bias -= cfg.learning_rate * gb
            epoch_loss += lv.total
        metrics = {}
        for name, split in (eval_splits or {}).items():
            res = evaluate(m, split)
            metrics[name] = {"macro": res.macro_accuracy, "overall": res.overall_accuracy}
        history.epochs.append(EpochRecord(epoch=epoch, train_loss=epoch_loss,
                                          eval_metrics=metrics))
    return m, history


def save_checkpoint(m: MlpModel, path) -> None:
    """Model checkpoint as JSON: shapes plus row-major weight arrays."""
    doc = {
        "layers": [
            {
                "shape": list(layer.weights.shape),
                "weights": layer.weights.ravel().tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in m.layers
        ],
        "freeze_mask": list(m.freeze_mask),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_checkpoint(path) -> MlpModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    layers = []
    for spec in doc["layers"]:
        shape = tuple(spec["shape"])
        layers.append(Layer(
            weights=np.asarray(spec["weights"], dtype=np.float64).reshape(shape),
            bias=np.asarray(spec["bias"], dtype=np.float64),
            activation=spec["activation"],
        ))
    return MlpModel(layers=layers, freeze_mask=[bool(b) for b in doc["freeze_mask"]])
