"""Scalar reference loss implementations, independent of the package's
vectorized code paths. Used to cross-check the unweighted case."""

import math


def unweighted_softmax_log_loss(z, label):
    m = max(z)
    lse = m + math.log(sum(math.exp(v - m) for v in z))
    return lse - z[label]


def unweighted_softmax_log_grad(z, label):
    m = max(z)
    exps = [math.exp(v - m) for v in z]
    total = sum(exps)
    grad = [e / total for e in exps]
    grad[label] -= 1.0
    return grad


def unweighted_ms_hinge_loss(z, label):
    comp = max(v for i, v in enumerate(z) if i != label)
    return max(0.0, 1.0 - (z[label] - comp))


def unweighted_ms_hinge_grad(z, label):
    comp_idx = None
    comp = -math.inf
    for i, v in enumerate(z):
        if i != label and v > comp:
            comp, comp_idx = v, i
    grad = [0.0] * len(z)
    if z[label] - comp < 1.0:
        grad[comp_idx] = 1.0
        grad[label] = -1.0
    return grad
