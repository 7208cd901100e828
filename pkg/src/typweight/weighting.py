"""Per-sample loss weights tau derived from typicality scores.

Every variant maps a typicality-direction score s in [0, 1] to a
nonnegative weight:

    uniform            1
    random             seeded uniform draw from [0, 1)
    typicality         s           (cls_typicality: same map, class-specific source)
    atypicality        1 - s       (cls_atypicality likewise)
    log_typ            -log(max(s, eps))
    log_cls_atyp       -log(max(1 - s, eps))
    exp_typ            exp(s)
    gamma_typ          gamma ** s
    polynomial         alpha * (s - mu)^d + beta, d even  (symmetric around
                       the train-mean score mu, emphasizing both extremes)
    external_precomputed   the stored per-sample score column, used directly
    internal_prob      s = true-label softmax probability
    internal_entropy   s = -Z log Z term (flip option: 1/e - s)
    hybrid_atyp_then_internal   epoch 1: atypicality from the external
                       scorer; epoch >= 2: internal_prob from the model
                       frozen at the epoch boundary

Weight tables are renormalized to mean 1 by default so the learning
rate stays comparable across variants; raw mode is available.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ConfigError, ParameterError
from .internal import InternalScoreTable, snapshot_scores
from .ocsvm import ScoreTable

LOG_EPS = 1e-6

VARIANTS = (
    "uniform",
    "random",
    "typicality",
    "atypicality",
    "cls_typicality",
    "cls_atypicality",
    "log_typ",
    "log_cls_atyp",
    "exp_typ",
    "gamma_typ",
    "polynomial",
    "external_precomputed",
    "internal_prob",
    "internal_entropy",
    "hybrid_atyp_then_internal",
)

_EXTERNAL_GENERAL = {"typicality", "atypicality", "log_typ", "exp_typ", "gamma_typ",
                     "polynomial"}
_EXTERNAL_CLS = {"cls_typicality", "cls_atypicality", "log_cls_atyp"}
_INTERNAL = {"internal_prob", "internal_entropy"}


@dataclass(frozen=True)
class WeightingSpec:
    """A weighting variant plus the parameters it reads.

    Only the parameters relevant to ``variant`` are consulted:
    alpha/beta/degree for polynomial, gamma for gamma_typ, seed for
    random, entropy_flip for internal_entropy. ``renormalize`` scales
    every built table to mean 1.
    """

    variant: str = "uniform"
    alpha: float = 8.0
    beta: float = 0.05
    degree: int = 4
    gamma: float = 4.0
    seed: int = 0
    entropy_flip: bool = False
    renormalize: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown weighting variant {self.variant!r}")
        if self.degree < 2 or self.degree % 2 != 0:
            raise ParameterError(f"polynomial degree must be even and >= 2, got {self.degree}")
        if not self.gamma > 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")

    def label(self) -> str:
        """Short human-readable cell label."""
        if self.variant == "polynomial":
            return f"polynomial_d{self.degree}"
        if self.variant == "gamma_typ":
            return f"gamma_typ_g{self.gamma:g}"
        return self.variant


def polynomial_weight(score: float, mu: float, alpha: float, beta: float, degree: int):
    """Even-degree polynomial weight alpha * (score - mu)^degree + beta.

    The even power is computed from the squared offset, so exactly
    opposite offsets map to bit-identical weights. Minimum value beta
    is attained at score = mu.
    """
    if degree < 2 or degree % 2 != 0:
        raise ParameterError(f"degree must be even and >= 2, got {degree}")
    if alpha < 0.0 or beta < 0.0:
        raise ParameterError("alpha and beta must be nonnegative")
    delta = np.asarray(score, dtype=np.float64) - mu
    sq = delta * delta
    out = alpha * sq ** (degree // 2) + beta
    return float(out) if np.isscalar(score) else out


def _check_unit(score, what: str):
    arr = np.asarray(score, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ParameterError(f"{what} must lie in [0, 1]")
    return arr


def compute_weight(spec: WeightingSpec, score: float, mu: float = 0.5,
                   rng: np.random.Generator | None = None) -> float:
    """Pointwise weight for one score under ``spec`` (no renormalization).

    ``mu`` is the train-mean score (polynomial only). For the random
    variant, draws come from ``rng`` when given, else from a fresh
    generator seeded with spec.seed; table building passes one shared
    generator so each sample gets an independent draw.
    """
    v = spec.variant
    if v == "hybrid_atyp_then_internal":
        raise ConfigError("hybrid weighting is resolved per epoch; use build_weight_table")
    if v == "uniform":
        return 1.0
    if v == "random":
        gen = rng if rng is not None else np.random.default_rng(spec.seed)
        return float(gen.random())
    s = float(_check_unit(score, "score"))
    if v in ("typicality", "cls_typicality", "internal_prob", "external_precomputed"):
        return s
    if v in ("atypicality", "cls_atypicality"):
        return 1.0 - s
    if v == "log_typ":
        return float(-np.log(max(s, LOG_EPS)))
    if v == "log_cls_atyp":
        return float(-np.log(max(1.0 - s, LOG_EPS)))
    if v == "exp_typ":
        return float(np.exp(s))
    if v == "gamma_typ":
        return float(spec.gamma ** s)
    if v == "internal_entropy":
        return max(1.0 / np.e - s, 0.0) if spec.entropy_flip else s
    if v == "polynomial":
        if not 0.0 <= mu <= 1.0:
            raise ParameterError(f"mu must lie in [0, 1], got {mu}")
        return float(polynomial_weight(s, mu, spec.alpha, spec.beta, spec.degree))
    raise ParameterError(f"unknown weighting variant {v!r}")


@dataclass
class WeightTable:
    """Per-sample weights in force for one epoch range.

    ``epoch=None`` marks a static table valid for the whole run.
    """

    sample_ids: np.ndarray
    weights: np.ndarray
    epoch: int | None = None

    def __post_init__(self):
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != self.sample_ids.shape:
            raise ParameterError("weights and sample_ids must align")
        if self.weights.size and (not np.isfinite(self.weights).all() or self.weights.min() < 0.0):
            raise ParameterError("weights must be finite and nonnegative")
        for arr in (self.sample_ids, self.weights):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.sample_ids.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("sample_id,epoch,weight\n")
            ep = "" if self.epoch is None else str(self.epoch)
            for sid, w in zip(self.sample_ids, self.weights):
                fh.write(f"{int(sid)},{ep},{float(w)!r}\n")


def _aligned_scores(table, d: Dataset, what: str) -> np.ndarray:
    if len(table) != len(d) or not np.array_equal(table.sample_ids, d.sample_ids):
        raise ConfigError(f"{what} table does not align with the train set sample_ids")
    return table.prob if isinstance(table, ScoreTable) else None


def _finalize(weights: np.ndarray, spec: WeightingSpec, d: Dataset,
              epoch: int | None) -> WeightTable:
    weights = np.asarray(weights, dtype=np.float64)
    if spec.renormalize:
        mean = weights.mean() if weights.size else 0.0
        if mean > 0.0:
            weights = weights / mean
    return WeightTable(sample_ids=d.sample_ids, weights=weights, epoch=epoch)


def build_weight_table(
    spec: WeightingSpec,
    train: Dataset,
    epoch: int = 1,
    external: ScoreTable | None = None,
    internal: InternalScoreTable | None = None,
) -> WeightTable:
    """Materialize the weight table for one epoch.

    ``external`` supplies one-class-SVM probabilities (general for the
    plain variants, class-specific for the cls_* ones); ``internal``
    supplies the epoch-boundary snapshot for the internal variants. The
    polynomial mu is the mean of the score column over the train set.
    Raises ConfigError when the score source a variant needs is absent.
    """
    v = spec.variant
    n = len(train)
    if v == "hybrid_atyp_then_internal":
        if epoch <= 1:
            return build_weight_table(_hybrid_stage(spec, "atypicality"), train,
                                      epoch=epoch, external=external)
        return build_weight_table(_hybrid_stage(spec, "internal_prob"), train,
                                  epoch=epoch, internal=internal)

    if v == "uniform":
        return _finalize(np.ones(n), spec, train, None)
    if v == "random":
        rng = np.random.default_rng(spec.seed)
        return _finalize(rng.random(n), spec, train, None)
    if v == "external_precomputed":
        if train.ext_scores is None:
            raise ConfigError("external_precomputed weighting needs an ext_score column")
        return _finalize(train.ext_scores.copy(), spec, train, None)

    if v in _EXTERNAL_GENERAL or v in _EXTERNAL_CLS:
        if external is None:
            raise ConfigError(f"variant {v!r} needs an external score table")
        want = "class_specific" if v in _EXTERNAL_CLS else "general"
        if external.mode != want:
            raise ConfigError(f"variant {v!r} needs a {want} score table, got {external.mode!r}")
        _aligned_scores(external, train, "external score")
        s = _check_unit(external.prob, "external probability")
    elif v in _INTERNAL:
        if internal is None:
            raise ConfigError(f"variant {v!r} needs an internal score table")
        if not np.array_equal(internal.sample_ids, train.sample_ids):
            raise ConfigError("internal table does not align with the train set sample_ids")
        s = internal.z_true if v == "internal_prob" else internal.entropy
    else:
        raise ParameterError(f"unknown weighting variant {v!r}")

    if v in ("typicality", "cls_typicality", "internal_prob"):
        w = s.copy()
    elif v in ("atypicality", "cls_atypicality"):
        w = 1.0 - s
    elif v == "log_typ":
        w = -np.log(np.maximum(s, LOG_EPS))
    elif v == "log_cls_atyp":
        w = -np.log(np.maximum(1.0 - s, LOG_EPS))
    elif v == "exp_typ":
        w = np.exp(s)
    elif v == "gamma_typ":
        w = spec.gamma ** s
    elif v == "internal_entropy":
        w = np.maximum(1.0 / np.e - s, 0.0) if spec.entropy_flip else s.copy()
    elif v == "polynomial":
        mu = float(s.mean())
        w = polynomial_weight(s, mu, spec.alpha, spec.beta, spec.degree)
    ep = epoch if v in _INTERNAL else None
    return _finalize(w, spec, train, ep)


def _hybrid_stage(spec: WeightingSpec, variant: str) -> WeightingSpec:
    return WeightingSpec(variant=variant, alpha=spec.alpha, beta=spec.beta,
                         degree=spec.degree, gamma=spec.gamma, seed=spec.seed,
                         entropy_flip=spec.entropy_flip, renormalize=spec.renormalize)


class WeightSchedule:
    """Supplies the weight table in force for each training epoch.

    Static variants are built once and reused; internal and hybrid
    variants are rebuilt at every epoch boundary from a snapshot of the
    model as it stands there.
    """

    def __init__(self, spec: WeightingSpec, train: Dataset,
                 external: ScoreTable | None = None):
        self.spec = spec
        self.train = train
        self.external = external
        self._static: WeightTable | None = None
        v = spec.variant
        self._dynamic = v in _INTERNAL or v == "hybrid_atyp_then_internal"
        if not self._dynamic:
            self._static = build_weight_table(spec, train, external=external)
        elif v == "hybrid_atyp_then_internal" and external is None:
            raise ConfigError("hybrid weighting needs an external (general) score table")

    def table_for_epoch(self, epoch: int, model) -> WeightTable:
        if not self._dynamic:
            return self._static
        v = self.spec.variant
        if v == "hybrid_atyp_then_internal" and epoch <= 1:
            return build_weight_table(self.spec, self.train, epoch=epoch,
                                      external=self.external)
        internal = snapshot_scores(model, self.train, epoch)
        return build_weight_table(self.spec, self.train, epoch=epoch,
                                  external=self.external, internal=internal)
