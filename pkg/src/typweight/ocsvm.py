"""One-class SVM typicality scorer.

Fits the nu-parameterized one-class SVM dual

    min_alpha  0.5 * alpha' Q alpha
    s.t.       sum(alpha) = 1,   0 <= alpha_i <= 1 / (nu * N)

with Q_ij = K(x_i, x_j), by SMO-style pairwise coordinate ascent with
second-order working-set selection. The decision score of a query x is
``sum_i alpha_i K(sv_i, x) - rho``; higher means more typical of the
training distribution. A monotone logistic calibration maps raw scores
to probabilities in [0, 1], centered so the median train score maps
to 0.5.

The solver inner loop is the package's hottest kernel; a numba and a
vectorized numpy implementation carry the same algorithm and tie-break
rules (first index wins), dispatched via ``typweight._accel``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .data import Dataset
from .errors import (
    ConfigError,
    FlatScoresError,
    InsufficientDataError,
    ParameterError,
)
from .kernels import KernelSpec, kernel_matrix, median_heuristic

_A_FLOOR = 1e-12   # curvature floor for the 2x2 subproblem


@njit(cache=True)
def _smo_numba(Q, box, tol, max_iter):  # pragma: no cover - exercised via dispatch
    n = Q.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    m = 1.0 / box
    nfull = int(np.floor(m + 1e-12))
    if nfull > n:
        nfull = n
    for t in range(nfull):
        alpha[t] = box
    if nfull < n:
        rem = 1.0 - nfull * box
        if rem > 0.0:
            alpha[nfull] = rem
    grad = Q @ alpha

    it = 0
    gap = np.inf
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n):
            if alpha[t] < box and -grad[t] > gmax:
                gmax = -grad[t]
                i = t
        if i < 0:
            gap = 0.0
            break
        gmin = np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if alpha[t] > 0.0:
                if -grad[t] < gmin:
                    gmin = -grad[t]
                b = gmax + grad[t]
                if b > 0.0:
                    a = Q[i, i] + Q[t, t] - 2.0 * Q[i, t]
                    if a <= 0.0:
                        a = _A_FLOOR
                    diff = -(b * b) / a
                    if diff < best:
                        best = diff
                        j = t
        gap = gmax - gmin
        if j < 0 or gap < tol:
            break
        a = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
        if a <= 0.0:
            a = _A_FLOOR
        dstar = (grad[j] - grad[i]) / a
        room_i = box - alpha[i]
        room_j = alpha[j]
        if dstar >= room_i and room_i <= room_j:
            delta = room_i
            alpha[i] = box
            alpha[j] -= delta
        elif dstar >= room_j:
            delta = room_j
            alpha[j] = 0.0
            alpha[i] += delta
        else:
            delta = dstar
            alpha[i] += delta
            alpha[j] -= delta
        for k in range(n):
            grad[k] += delta * (Q[k, i] - Q[k, j])
        it += 1
    return alpha, grad, it, gap


def _smo_numpy(Q, box, tol, max_iter):
    n = Q.shape[0]
    alpha = np.zeros(n, dtype=np.float64)
    nfull = min(int(np.floor(1.0 / box + 1e-12)), n)
    alpha[:nfull] = box
    if nfull < n:
        rem = 1.0 - nfull * box
        if rem > 0.0:
            alpha[nfull] = rem
    grad = Q @ alpha
    diag = np.ascontiguousarray(np.diag(Q))

    it = 0
    gap = np.inf
    while it < max_iter:
        neg = -grad
        up = np.where(alpha < box, neg, -np.inf)
        i = int(np.argmax(up))
        gmax = up[i]
        if gmax == -np.inf:
            gap = 0.0
            break
        down_mask = alpha > 0.0
        down = np.where(down_mask, neg, np.inf)
        gmin = float(np.min(down))
        gap = gmax - gmin
        b = gmax + grad
        a = diag[i] + diag - 2.0 * Q[i]
        a = np.where(a <= 0.0, _A_FLOOR, a)
        obj = np.where(down_mask & (b > 0.0), -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if obj[j] == np.inf or gap < tol:
            break
        aij = diag[i] + diag[j] - 2.0 * Q[i, j]
        if aij <= 0.0:
            aij = _A_FLOOR
        dstar = (grad[j] - grad[i]) / aij
        room_i = box - alpha[i]
        room_j = alpha[j]
        if dstar >= room_i and room_i <= room_j:
            delta = room_i
            alpha[i] = box
            alpha[j] -= delta
        elif dstar >= room_j:
            delta = room_j
            alpha[j] = 0.0
            alpha[i] += delta
        else:
            delta = dstar
            alpha[i] += delta
            alpha[j] -= delta
        grad += delta * (Q[:, i] - Q[:, j])
        it += 1
    return alpha, grad, it, gap


def solve_dual(Q: np.ndarray, nu: float, tol: float = 1e-6, max_iter: int = 100_000):
    """Solve the one-class dual on a precomputed Gram matrix.

    Returns (alpha, grad, iterations, kkt_gap); grad = Q @ alpha equals the
    uncentered decision score of each training point.
    """
    n = Q.shape[0]
    box = 1.0 / (nu * n)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if NUMBA_ENABLED:
        return _smo_numba(Q, box, tol, max_iter)
    return _smo_numpy(Q, box, tol, max_iter)


def dual_objective(Q: np.ndarray, alpha: np.ndarray) -> float:
    return 0.5 * float(alpha @ Q @ alpha)


def _compute_rho(alpha: np.ndarray, grad: np.ndarray, box: float) -> float:
    free = (alpha > 0.0) & (alpha < box)
    if free.any():
        return float(grad[free].mean())
    at_box = grad[alpha >= box]
    at_zero = grad[alpha <= 0.0]
    if at_box.size and at_zero.size:
        return 0.5 * (float(at_box.max()) + float(at_zero.min()))
    if at_box.size:
        return float(at_box.max())
    return float(at_zero.min())


@dataclass(frozen=True)
class Calibration:
    """Monotone logistic squash of raw decision scores to [0, 1]."""

    center: float   # median of the fit scores; maps to probability 0.5
    scale: float    # interquartile range of the fit scores; 1.0 if the IQR is 0

    def apply(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        return 1.0 / (1.0 + np.exp(-(raw - self.center) / self.scale))


def calibrate(scores) -> Calibration:
    """Fit the logistic calibration on a 1-D collection of raw scores.

    Raises FlatScoresError when every score is identical; callers fall
    back to a uniform probability of 0.5.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise InsufficientDataError("calibration needs at least 2 scores")
    if float(scores.max()) == float(scores.min()):
        raise FlatScoresError("all decision scores identical; fall back to probability 0.5")
    center = float(np.median(scores))
    q75, q25 = np.percentile(scores, [75.0, 25.0])
    scale = float(q75 - q25)
    if scale <= 0.0:
        scale = 1.0
    return Calibration(center=center, scale=scale)


@dataclass
class OneClassSvmModel:
    """Fitted scorer: support expansion, offset, kernel, and calibration."""

    support_vectors: np.ndarray   # (S, D)
    alphas: np.ndarray            # (S,), positive, summing to 1
    rho: float
    kernel: KernelSpec
    nu: float
    n_train: int
    calibration: Calibration | None = None

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def box(self) -> float:
        return 1.0 / (self.nu * self.n_train)

    def probability(self, raw):
        if self.calibration is None:
            return np.full(np.shape(raw), 0.5, dtype=np.float64)
        return self.calibration.apply(raw)


def _as_features(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.features
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError("expected a Dataset or an (N, D) array")
    return x


def fit_ocsvm(
    data,
    nu: float = 0.1,
    kernel: KernelSpec | None = None,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 100_000,
) -> OneClassSvmModel:
    """Fit a one-class SVM on positive samples only.

    ``data`` is a Dataset (one split, optionally restricted to one class)
    or a plain (N, D) array. The rbf bandwidth, when unset, is resolved by
    the median heuristic on a seed-chosen subsample. Fitting is
    single-threaded and deterministic given the seed.
    """
    x = _as_features(data)
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError(f"one-class SVM needs at least 2 samples, got {n}")
    if not 0.0 < nu <= 1.0:
        raise ParameterError(f"nu must lie in (0, 1], got {nu}")
    spec = kernel or KernelSpec()
    if spec.kind == "rbf" and spec.bandwidth is None:
        spec = spec.resolved(median_heuristic(x, seed=seed))

    Q = kernel_matrix(spec, x, x)
    alpha, grad, _, _ = solve_dual(Q, nu, tol=tol, max_iter=max_iter)
    box = 1.0 / (nu * n)
    rho = _compute_rho(alpha, grad, box)

    sv = alpha > 0.0
    model = OneClassSvmModel(
        support_vectors=x[sv].copy(),
        alphas=alpha[sv].copy(),
        rho=rho,
        kernel=spec,
        nu=nu,
        n_train=n,
    )
    train_raw = grad - rho
    try:
        model.calibration = calibrate(train_raw)
    except FlatScoresError:
        model.calibration = None
    return model


def decision_scores(model: OneClassSvmModel, x: np.ndarray) -> np.ndarray:
    """Raw decision scores for an (N, D) query block."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise ParameterError(
            f"query dimension {x.shape[-1] if x.ndim else '?'} does not match model dim {model.dim}"
        )
    k = kernel_matrix(model.kernel, x, model.support_vectors)
    return k @ model.alphas - model.rho


def decision_score(model: OneClassSvmModel, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("decision_score takes a single feature vector")
    return float(decision_scores(model, x[None, :])[0])


def fit_class_specific(
    train: Dataset,
    nu: float = 0.1,
    kernel: KernelSpec | None = None,
    seed: int = 0,
    tol: float = 1e-6,
    max_iter: int = 100_000,
) -> dict[int, OneClassSvmModel]:
    """One model per class, each fit on that class's samples only."""
    models: dict[int, OneClassSvmModel] = {}
    for c in range(train.num_classes):
        sub = train.restrict_to_class(c)
        if len(sub) < 2:
            raise InsufficientDataError(
                f"class {c} has {len(sub)} samples; class-specific fitting needs >= 2"
            )
        models[c] = fit_ocsvm(sub, nu=nu, kernel=kernel, seed=seed + c,
                              tol=tol, max_iter=max_iter)
    return models


@dataclass
class ScoreTable:
    """Per-sample raw decision scores and calibrated probabilities.

    Computed once, offline; immutable for a whole training run.
    """

    sample_ids: np.ndarray
    raw: np.ndarray
    prob: np.ndarray
    mode: str = "general"   # "general" | "class_specific"

    def __post_init__(self):
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.raw = np.asarray(self.raw, dtype=np.float64)
        self.prob = np.asarray(self.prob, dtype=np.float64)
        for arr in (self.sample_ids, self.raw, self.prob):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.sample_ids.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("sample_id,raw_decision,probability\n")
            for sid, r, p in zip(self.sample_ids, self.raw, self.prob):
                fh.write(f"{int(sid)},{float(r)!r},{float(p)!r}\n")

    @classmethod
    def from_csv(cls, path, mode: str = "general") -> "ScoreTable":
        sids, raws, probs = [], [], []
        with Path(path).open(encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("sample_id"):
                raise ParameterError(f"{path}: not a score table")
            for line in fh:
                sid, r, p = line.strip().split(",")
                sids.append(int(sid))
                raws.append(float(r))
                probs.append(float(p))
        return cls(sample_ids=np.array(sids), raw=np.array(raws),
                   prob=np.array(probs), mode=mode)


def score_dataset(models, d: Dataset, mode: str = "general") -> ScoreTable:
    """Score every sample of ``d``.

    ``mode='general'`` takes a single model; ``mode='class_specific'``
    takes a dict of per-class models and scores each sample with the
    model of its own label. Pure given the inputs; rerunning yields a
    bitwise-identical table.
    """
    if mode == "general":
        if not isinstance(models, OneClassSvmModel):
            raise ConfigError("general mode expects a single OneClassSvmModel")
        raw = decision_scores(models, d.features)
        prob = models.probability(raw)
    elif mode == "class_specific":
        if not isinstance(models, dict):
            raise ConfigError("class_specific mode expects a dict of per-class models")
        raw = np.empty(len(d), dtype=np.float64)
        prob = np.empty(len(d), dtype=np.float64)
        for c in np.unique(d.labels):
            c = int(c)
            if c not in models:
                raise ConfigError(f"no model for class {c} in class-specific score table")
            mask = d.labels == c
            r = decision_scores(models[c], d.features[mask])
            raw[mask] = r
            prob[mask] = models[c].probability(r)
    else:
        raise ConfigError(f"unknown scoring mode {mode!r}")
    return ScoreTable(sample_ids=d.sample_ids, raw=raw, prob=prob, mode=mode)


def model_to_dict(model: OneClassSvmModel) -> dict:
    return {
        "kernel": {"kind": model.kernel.kind, "bandwidth": model.kernel.bandwidth},
        "nu": model.nu,
        "n_train": model.n_train,
        "rho": model.rho,
        "alphas": model.alphas.tolist(),
        "support_vectors": model.support_vectors.tolist(),
        "calibration": None if model.calibration is None else {
            "center": model.calibration.center, "scale": model.calibration.scale,
        },
    }


def model_from_dict(doc: dict) -> OneClassSvmModel:
    cal = doc.get("calibration")
    return OneClassSvmModel(
        support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
        alphas=np.asarray(doc["alphas"], dtype=np.float64),
        rho=float(doc["rho"]),
        kernel=KernelSpec(kind=doc["kernel"]["kind"], bandwidth=doc["kernel"]["bandwidth"]),
        nu=float(doc["nu"]),
        n_train=int(doc["n_train"]),
        calibration=None if cal is None else Calibration(center=cal["center"], scale=cal["scale"]),
    )


def save_model(model, path) -> None:
    """Serialize one model or a class-keyed bank of models to JSON."""
    if isinstance(model, dict):
        doc = {"mode": "class_specific",
               "models": {str(c): model_to_dict(m) for c, m in sorted(model.items())}}
    else:
        doc = {"mode": "general", "model": model_to_dict(model)}
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc["mode"] == "class_specific":
        return {int(c): model_from_dict(m) for c, m in doc["models"].items()}
    return model_from_dict(doc["model"])
