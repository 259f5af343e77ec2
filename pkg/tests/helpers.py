"""Independent numerical oracles shared across the test suite."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog

from haseparator.losses import HASEPARATOR, ARCFACE, compute_loss

FD_STEP = 1e-6


def finite_difference_grads(e, w, labels, config, step=FD_STEP):
    """Central-difference gradients of total_loss w.r.t. E and W."""
    e = np.array(e, dtype=np.float64)
    w = np.array(w, dtype=np.float64)
    out = []
    for arr in (e, w):
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            up = compute_loss(e, w, labels, config).total_loss
            arr[idx] = orig - step
            down = compute_loss(e, w, labels, config).total_loss
            arr[idx] = orig
            num[idx] = (up - down) / (2.0 * step)
        out.append(num)
    return out


def relative_error(analytic, numeric) -> float:
    scale = max(np.max(np.abs(numeric)), np.max(np.abs(analytic)), 1e-8)
    return float(np.max(np.abs(np.asarray(analytic) - numeric)) / scale)


def random_instance(rng, batch=4, dim=5, classes=3):
    e = rng.normal(size=(batch, dim))
    w = rng.normal(size=(dim, classes))
    labels = rng.integers(0, classes, size=batch)
    return e, w, labels


def away_from_kinks(e, w, labels, config, slack=1e-3) -> bool:
    """True when the instance sits in a smooth region of the active loss.

    Finite differences are only meaningful away from the hinge kink, the
    arccos boundaries, and zero-norm vectors where normalization is not
    differentiable.
    """
    e = np.asarray(e, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if np.min(np.linalg.norm(e, axis=1)) < 1e-2:
        return False
    if np.min(np.linalg.norm(w, axis=0)) < 1e-2:
        return False
    labels = np.asarray(labels)
    if config.loss_kind == HASEPARATOR:
        proj = compute_loss(e, w, labels, config).projections
        off_target = np.ones_like(proj, dtype=bool)
        off_target[np.arange(labels.size), labels] = False
        if np.min(np.abs(proj[off_target] - config.margin)) < slack:
            return False
    if config.loss_kind == ARCFACE:
        e_hat = e / np.linalg.norm(e, axis=1, keepdims=True)
        w_hat = w / np.linalg.norm(w, axis=0, keepdims=True)
        cos_t = np.einsum("ij,ji->i", e_hat, w_hat[:, labels])
        theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
        if np.min(theta) < slack or np.max(theta) > math.pi - config.arc_margin - slack:
            return False
    return True


def smooth_instances(config, count, seed=0, batch=4, dim=5, classes=3):
    """Yield `count` random instances that pass the kink filter."""
    rng = np.random.default_rng(seed)
    found = 0
    while found < count:
        e, w, labels = random_instance(rng, batch, dim, classes)
        if away_from_kinks(e, w, labels, config):
            found += 1
            yield e, w, labels


def transport_cost(p, q, locations) -> float:
    """Minimum-cost transport between two 1-d distributions, solved as an LP.

    Ground distance |locations[i] - locations[j]|; p and q must sum to 1.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    locations = np.asarray(locations, dtype=np.float64)
    n = p.size
    cost = np.abs(locations[:, None] - locations[None, :]).ravel()
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n : (i + 1) * n] = 1.0  # mass leaving bin i
        a_eq[n + i, i::n] = 1.0  # mass arriving at bin i
    b_eq = np.concatenate([p, q])
    result = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert result.success, result.message
    return float(result.fun)
