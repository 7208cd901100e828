"""Kernel functions and bandwidth selection for the one-class SVM scorer.

The RBF kernel is K(x, y) = exp(-||x - y||^2 / (2 * bandwidth^2)); the
default bandwidth is the median pairwise Euclidean distance of a seeded
subsample of at most 256 points (median heuristic). Pairwise distance
matrices are a hot kernel: a numba loop implementation and a vectorized
numpy fallback are selected via ``typweight._accel``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .errors import ParameterError

KERNEL_KINDS = ("rbf", "linear")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters. ``bandwidth=None`` requests the
    median heuristic at fit time (rbf only)."""

    kind: str = "rbf"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"kernel kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0.0:
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth}")

    def resolved(self, bandwidth: float) -> "KernelSpec":
        return replace(self, bandwidth=float(bandwidth))


@njit(cache=True)
def _sqdist_numba(a, b):  # pragma: no cover - exercised via dispatch
    n, d = a.shape
    m = b.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                s += diff * diff
            out[i, j] = s
    return out


def _sqdist_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # dot-product expansion; clip tiny negatives from cancellation
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    sq = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (len(a), len(b))."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[1]:
        raise ParameterError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if NUMBA_ENABLED:
        return _sqdist_numba(a, b)
    return _sqdist_numpy(a, b)


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """K(a_i, b_j) for every pair."""
    if spec.kind == "linear":
        return np.ascontiguousarray(a, dtype=np.float64) @ np.ascontiguousarray(b, dtype=np.float64).T
    if spec.bandwidth is None:
        raise ParameterError("rbf kernel needs a resolved bandwidth")
    sq = squared_distances(a, b)
    return np.exp(sq / (-2.0 * spec.bandwidth * spec.bandwidth))


def median_heuristic(x: np.ndarray, max_samples: int = 256, seed: int = 0) -> float:
    """Median pairwise distance of a seeded subsample; 1.0 if degenerate."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n > max_samples:
        rng = np.random.default_rng(seed)
        x = x[rng.choice(n, size=max_samples, replace=False)]
    sq = squared_distances(x, x)
    iu = np.triu_indices(x.shape[0], k=1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.median(np.sqrt(sq[iu])))
    return med if med > 0.0 else 1.0
