"""Brute-force QP oracle for the one-class SVM dual, used only by tests.

Solves  min 0.5 a' Q a  s.t.  sum(a) = 1, 0 <= a_i <= C  by projected
gradient descent on the full dual, with an exact bisection projection
onto the capped simplex. Independent of the package's SMO path.
"""

import numpy as np


def project_capped_simplex(v: np.ndarray, cap: float, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {a: sum(a) = total, 0 <= a_i <= cap}.

    Solves sum(clip(v - lam, 0, cap)) = total exactly: the left side is
    piecewise linear and nonincreasing in lam with breakpoints at v_i
    and v_i - cap, so the crossing segment is found by scanning the
    sorted breakpoints and interpolating on it.
    """
    v = np.asarray(v, dtype=np.float64)
    bp = np.sort(np.concatenate([v, v - cap]))
    g = np.clip(v[None, :] - bp[:, None], 0.0, cap).sum(axis=1)
    # g[0] = n*cap >= total (feasibility), g[-1] = 0 < total
    idx = int(np.searchsorted(-g, -total, side="left"))
    if idx <= 0:
        lam = bp[0]
    elif idx >= bp.size:
        lam = bp[-1]
    else:
        g_hi, g_lo = g[idx - 1], g[idx]
        if g_hi == g_lo:
            lam = bp[idx]
        else:
            lam = bp[idx - 1] + (g_hi - total) * (bp[idx] - bp[idx - 1]) / (g_hi - g_lo)
    return np.clip(v - lam, 0.0, cap)


def solve_qp_projected_gradient(Q: np.ndarray, nu: float, max_iter: int = 100_000,
                                tol: float = 1e-10) -> np.ndarray:
    """Dense projected-gradient solve of the one-class dual.

    Stops once the iterate stops moving or the objective improvement
    stalls well below the 1e-6 comparison tolerance this oracle backs.
    """
    n = Q.shape[0]
    cap = 1.0 / (nu * n)
    step = 1.0 / max(float(np.linalg.eigvalsh(Q).max()), 1e-12)
    alpha = project_capped_simplex(np.full(n, 1.0 / n), cap)
    f_prev = np.inf
    stalled = 0
    for _ in range(max_iter):
        grad = Q @ alpha
        f = 0.5 * float(alpha @ grad)
        stalled = stalled + 1 if f_prev - f < 1e-14 * max(1.0, abs(f)) else 0
        if stalled >= 20:
            break
        f_prev = min(f_prev, f)
        new = project_capped_simplex(alpha - step * grad, cap)
        if np.abs(new - alpha).max() < tol:
            alpha = new
            break
        alpha = new
    return alpha


def qp_objective(Q: np.ndarray, alpha: np.ndarray) -> float:
    return 0.5 * float(alpha @ Q @ alpha)
