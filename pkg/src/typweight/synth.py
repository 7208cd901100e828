"""Synthetic class clouds with a controllable typicality gradient.

Each class is a Gaussian cloud around its mean. Radial position is
measured in normalized units r = mahalanobis_distance / sqrt(D), so a
bulk draw sits near r = 1 regardless of dimension and the shell bounds
below keep the same meaning at any D:

* train and test-typical samples are cloud draws accepted at
  r < shell_lo (the core),
* test-atypical samples keep their labels but sit on the radial band
  r in [shell_lo, shell_hi] around their class mean,
* the ground-truth oracle typicality of any sample is exp(-r^2 / 2),
  in (0, 1], with 1 exactly at the class mean.

Generation is deterministic per seed; sample_ids are unique across the
three splits and class balance is exact in each split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .data import Dataset
from .errors import GenerationError, ParameterError
from .ocsvm import score_dataset


@dataclass(frozen=True)
class CloudSpec:
    num_classes: int = 6
    dim: int = 32
    samples_per_class: int = 500          # train split
    test_typical_per_class: int = 100
    test_atypical_per_class: int = 100
    mean_radius: float = 3.0              # distance of each class mean from the origin
    sigma: float = 1.0                    # isotropic cloud scale (ignored per-class when
                                          # full covariances are given)
    class_means: tuple | None = None      # explicit (C, D) means; default axis-aligned
    covariances: tuple | None = None      # explicit per-class (D, D) PD matrices
    atypical_shell: tuple[float, float] = (1.5, 2.5)
    atypical_mode: str = "shell"          # "shell" | "lowrank"
    lowrank_directions: int = 3
    seed: int = 0
    max_reject_rounds: int = 200

    def __post_init__(self):
        if self.num_classes < 1 or self.dim < 1:
            raise ParameterError("num_classes and dim must be positive")
        lo, hi = self.atypical_shell
        if not 0.0 < lo < hi:
            raise ParameterError(f"shell band must satisfy 0 < lower < upper, got {self.atypical_shell}")
        if self.sigma <= 0.0:
            raise ParameterError("sigma must be positive")
        if self.atypical_mode not in ("shell", "lowrank"):
            raise ParameterError(f"unknown atypical_mode {self.atypical_mode!r}")
        if self.class_means is None and self.num_classes > self.dim:
            raise ParameterError(
                "default axis-aligned means need num_classes <= dim; pass class_means"
            )


@dataclass
class GeneratedData:
    train: Dataset
    test_typical: Dataset
    test_atypical: Dataset


def _means(spec: CloudSpec) -> np.ndarray:
    if spec.class_means is not None:
        m = np.asarray(spec.class_means, dtype=np.float64)
        if m.shape != (spec.num_classes, spec.dim):
            raise ParameterError(f"class_means must be ({spec.num_classes}, {spec.dim})")
        return m
    m = np.zeros((spec.num_classes, spec.dim))
    for c in range(spec.num_classes):
        m[c, c] = spec.mean_radius
    return m


def _cholesky_factors(spec: CloudSpec) -> list[np.ndarray]:
    if spec.covariances is None:
        return [spec.sigma * np.eye(spec.dim)] * spec.num_classes
    factors = []
    for c, cov in enumerate(spec.covariances):
        cov = np.asarray(cov, dtype=np.float64)
        try:
            factors.append(np.linalg.cholesky(cov))
        except np.linalg.LinAlgError:
            raise ParameterError(f"covariance for class {c} is not positive-definite") from None
    return factors


def _draw_core(rng, count, dim, r_max, max_rounds):
    """Standard-normal draws with normalized radius below r_max."""
    kept = []
    have = 0
    sqrt_d = np.sqrt(dim)
    for _ in range(max_rounds):
        z = rng.standard_normal((max(2 * (count - have), 64), dim))
        r = np.linalg.norm(z, axis=1) / sqrt_d
        ok = z[r < r_max]
        if ok.shape[0]:
            kept.append(ok)
            have += ok.shape[0]
        if have >= count:
            block = np.concatenate(kept, axis=0)
            return block[:count]
    raise GenerationError(
        f"could not draw {count} core samples below normalized radius {r_max} "
        f"within {max_rounds} rounds"
    )


def _unit_rows(rng, count, dim):
    v = rng.standard_normal((count, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # re-draw exact zero vectors (probability ~0)
    while (norms == 0.0).any():
        bad = norms[:, 0] == 0.0
        v[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def _draw_shell(rng, spec: CloudSpec, count: int):
    """Unit-covariance displacements with normalized radius in the shell band."""
    lo, hi = spec.atypical_shell
    radii = rng.uniform(lo, hi, size=count) * np.sqrt(spec.dim)
    if spec.atypical_mode == "shell":
        u = _unit_rows(rng, count, spec.dim)
    else:
        k = min(spec.lowrank_directions, spec.dim)
        basis, _ = np.linalg.qr(rng.standard_normal((spec.dim, k)))
        u = _unit_rows(rng, count, k) @ basis.T
    z = u * radii[:, None]
    rnorm = np.linalg.norm(z, axis=1) / np.sqrt(spec.dim)
    return z, rnorm


def generate(spec: CloudSpec) -> GeneratedData:
    """Build train / test-typical / test-atypical splits with oracle scores."""
    rng = np.random.default_rng(spec.seed)
    means = _means(spec)
    chol = _cholesky_factors(spec)
    lo = spec.atypical_shell[0]
    sqrt_d = np.sqrt(spec.dim)

    def cloud_split(count_per_class):
        feats, labels, oracle = [], [], []
        for c in range(spec.num_classes):
            z = _draw_core(rng, count_per_class, spec.dim, lo, spec.max_reject_rounds)
            rnorm = np.linalg.norm(z, axis=1) / sqrt_d
            feats.append(means[c] + z @ chol[c].T)
            labels.append(np.full(count_per_class, c, dtype=np.int64))
            oracle.append(np.exp(-0.5 * rnorm * rnorm))
        return (np.concatenate(feats), np.concatenate(labels), np.concatenate(oracle))

    def shell_split(count_per_class):
        feats, labels, oracle = [], [], []
        for c in range(spec.num_classes):
            z, rnorm = _draw_shell(rng, spec, count_per_class)
            feats.append(means[c] + z @ chol[c].T)
            labels.append(np.full(count_per_class, c, dtype=np.int64))
            oracle.append(np.exp(-0.5 * rnorm * rnorm))
        return (np.concatenate(feats), np.concatenate(labels), np.concatenate(oracle))

    tr_x, tr_y, tr_o = cloud_split(spec.samples_per_class)
    tt_x, tt_y, tt_o = cloud_split(spec.test_typical_per_class)
    ta_x, ta_y, ta_o = shell_split(spec.test_atypical_per_class)

    n_tr, n_tt, n_ta = len(tr_y), len(tt_y), len(ta_y)
    ids = np.arange(n_tr + n_tt + n_ta, dtype=np.int64)
    mk = lambda x, y, o, sid, tag: Dataset(
        features=x, labels=y, sample_ids=sid, num_classes=spec.num_classes,
        split_tag=tag, oracle_typ=o,
    )
    return GeneratedData(
        train=mk(tr_x, tr_y, tr_o, ids[:n_tr], "train"),
        test_typical=mk(tt_x, tt_y, tt_o, ids[n_tr:n_tr + n_tt], "test-typical"),
        test_atypical=mk(ta_x, ta_y, ta_o, ids[n_tr + n_tt:], "test-atypical"),
    )


@dataclass(frozen=True)
class SpearmanCheck:
    rho: float
    degenerate: bool = False


def oracle_score_check(models, data: Dataset, mode: str = "class_specific") -> SpearmanCheck:
    """Rank agreement between scorer probabilities and the generation oracle.

    Returns rho = 0 with the degenerate flag set when either ranking is
    constant (e.g. a flat scorer), where the correlation is undefined.
    """
    if data.oracle_typ is None:
        raise ParameterError("dataset carries no oracle typicality column")
    table = score_dataset(models, data, mode=mode)
    if np.unique(table.prob).size < 2 or np.unique(data.oracle_typ).size < 2:
        return SpearmanCheck(rho=0.0, degenerate=True)
    rho = float(spearmanr(table.prob, data.oracle_typ).statistic)
    if np.isnan(rho):
        return SpearmanCheck(rho=0.0, degenerate=True)
    return SpearmanCheck(rho=rho, degenerate=False)
