"""Sample-weighted classification losses with analytic gradients.

Two losses over logits z (length C), true label i, and per-sample
weight tau >= 0:

* softmax-log:  L = -tau * log softmax(z)[i]
  gradient      dL/dz = tau * (softmax(z) - onehot(i))
* multi-class structured hinge (Crammer-Singer):
  phi = z[i] - max_{j != i} z[j]
  L   = tau * max(0, 1 - phi)
  subgradient: +tau at the best competing index and -tau at i when
  phi < 1, zero otherwise (the kink at phi = 1 takes the zero branch;
  competing-max ties break to the lowest class index).

Batch reduction is a SUM over samples, accumulated in ascending
sample_id order when ids are provided so totals are independent of
batch permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

LOSS_KINDS = ("softmax_log", "ms_hinge")

# Logit vectors are plain float arrays of length C.
LogitVector = np.ndarray


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (max-subtraction); positive, sums to 1."""
    z = np.asarray(z, dtype=np.float64)
    shift = z.max(axis=-1, keepdims=True)
    e = np.exp(z - shift)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    shift = z.max(axis=-1, keepdims=True)
    zs = z - shift
    return zs - np.log(np.exp(zs).sum(axis=-1, keepdims=True))


@dataclass(frozen=True)
class LossValue:
    """Sum-reduced loss plus its per-sample terms (all nonnegative)."""

    total: float
    per_sample: np.ndarray


def _check_batch(z: np.ndarray, labels: np.ndarray, taus: np.ndarray):
    if z.ndim != 2:
        raise ParameterError("logits must be a (B, C) array")
    b, c = z.shape
    if c < 2:
        raise ParameterError("need at least 2 classes")
    if not np.isfinite(z).all():
        raise ParameterError("logits must be finite")
    if labels.shape != (b,) or taus.shape != (b,):
        raise ParameterError("labels/taus must match the batch size")
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= c:
        raise ParameterError("label outside [0, C)")
    if taus.min(initial=0.0) < 0.0:
        raise ParameterError("weights must be nonnegative")


def _softmax_log_batch(z, labels, taus):
    lp = log_softmax(z)
    rows = np.arange(z.shape[0])
    per = taus * (-lp[rows, labels])
    grad = np.exp(lp)
    grad[rows, labels] -= 1.0
    grad *= taus[:, None]
    return per, grad


def _ms_hinge_batch(z, labels, taus):
    b = z.shape[0]
    rows = np.arange(b)
    masked = z.copy()
    masked[rows, labels] = -np.inf
    comp_idx = np.argmax(masked, axis=1)          # lowest index on ties
    phi = z[rows, labels] - masked[rows, comp_idx]
    active = phi < 1.0                            # zero branch at the kink
    per = np.where(active, taus * (1.0 - phi), 0.0)
    grad = np.zeros_like(z)
    act_rows = rows[active]
    grad[act_rows, comp_idx[active]] = taus[active]
    grad[act_rows, labels[active]] = -taus[active]
    return per, grad


def batch_loss(kind: str, z: np.ndarray, labels, taus, sample_ids=None):
    """Weighted loss over a batch: returns (LossValue, gradients (B, C)).

    Per-sample terms and gradients are in input order; the total is
    accumulated in ascending sample_id order when ids are given, making
    it invariant to batch permutation.
    """
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    taus = np.asarray(taus, dtype=np.float64)
    _check_batch(z, labels, taus)
    if kind == "softmax_log":
        per, grad = _softmax_log_batch(z, labels, taus)
    elif kind == "ms_hinge":
        per, grad = _ms_hinge_batch(z, labels, taus)
    else:
        raise ParameterError(f"loss kind must be one of {LOSS_KINDS}, got {kind!r}")
    if sample_ids is not None:
        order = np.argsort(np.asarray(sample_ids), kind="stable")
        total = float(np.sum(per[order]))
    else:
        total = float(np.sum(per))
    return LossValue(total=total, per_sample=per), grad


def weighted_softmax_log_loss(z: LogitVector, label: int, tau: float):
    """Single-sample weighted softmax-log loss and gradient wrt z."""
    lv, grad = batch_loss("softmax_log", np.asarray(z, dtype=np.float64)[None, :],
                          np.array([label]), np.array([float(tau)]))
    return float(lv.per_sample[0]), grad[0]


def weighted_ms_hinge_loss(z: LogitVector, label: int, tau: float):
    """Single-sample weighted multi-class hinge loss and subgradient wrt z."""
    lv, grad = batch_loss("ms_hinge", np.asarray(z, dtype=np.float64)[None, :],
                          np.array([label]), np.array([float(tau)]))
    return float(lv.per_sample[0]), grad[0]


def margin(z: LogitVector, label: int) -> float:
    """phi: true-class logit minus the best competing logit."""
    z = np.asarray(z, dtype=np.float64)
    if z.size < 2:
        raise ParameterError("need at least 2 classes")
    others = np.delete(z, label)
    return float(z[label] - others.max())
