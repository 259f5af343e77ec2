"""Loss heads on the unit hypersphere.

Three losses share the same normalized-cosine classification head: plain
softmax cross-entropy, an additive-angular-margin variant (arcface), and the
hyperplane separator loss (haseparator). The separator loss augments
cross-entropy with a hinge cost on the projections of each embedding onto
the unit normals of its target class's separation hyperplanes; the normal
for class pair (target, other) is the normalized difference of the two unit
weight columns, oriented target-minus-other so that well-separated
embeddings have large positive projections.

All gradients are analytic (chain rule through the normalizations, the
batched contraction, and the piecewise-linear hinge) and are validated
against central finite differences in the test suite. The hinge uses the
zero subgradient at its kink, like standard hinge-loss implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ConfigError
from .tensor import EPSILON, as_labels, as_matrix

SOFTMAX = "softmax"
HASEPARATOR = "haseparator"
ARCFACE = "arcface"
LOSS_KINDS = (SOFTMAX, HASEPARATOR, ARCFACE)

# Cosines are clamped this far inside [-1, 1] before arccos so the angular
# margin path never sees an infinite derivative.
_COS_CLAMP = 1e-12


@dataclass(frozen=True)
class LossConfig:
    """Hyperparameters of a loss head.

    sigma scales the cosine logits (the hypersphere radius). margin is the
    hinge threshold on hyperplane projections, meaningful for haseparator
    and constrained to (0, 1]. arc_margin is the additive angular margin in
    radians, used only by arcface.
    """

    loss_kind: str = HASEPARATOR
    sigma: float = 3.0
    margin: float = 0.9
    arc_margin: float = 0.5

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ConfigError(
                f"unknown loss_kind {self.loss_kind!r}, expected one of {LOSS_KINDS}"
            )
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.loss_kind == HASEPARATOR and not 0 < self.margin <= 1:
            raise ConfigError(f"margin must lie in (0, 1], got {self.margin}")
        if self.loss_kind == ARCFACE and not 0 <= self.arc_margin < math.pi / 2:
            raise ConfigError(
                f"arc_margin must lie in [0, pi/2), got {self.arc_margin}"
            )


@dataclass
class LossResult:
    """Forward values and analytic gradients of one loss evaluation.

    total_loss = ce_loss + separator_loss. projections is None for the
    losses without a separator term. Gradients are with respect to the raw
    (unnormalized) embeddings and classification weights.
    """

    total_loss: float
    ce_loss: float
    separator_loss: float
    logits: np.ndarray
    projections: np.ndarray | None
    grad_embeddings: np.ndarray
    grad_weights: np.ndarray


def _normalize_rows(m):
    """Row normalization returning (unit rows, row norms); zero rows stay zero."""
    norms = np.sqrt(np.sum(m * m, axis=1))
    safe = np.where(norms > EPSILON, norms, 1.0)
    unit = m / safe[:, None]
    unit[norms <= EPSILON, :] = 0.0
    return unit, norms


def _normalize_cols(m):
    norms = np.sqrt(np.sum(m * m, axis=0))
    safe = np.where(norms > EPSILON, norms, 1.0)
    unit = m / safe[None, :]
    unit[:, norms <= EPSILON] = 0.0
    return unit, norms


def _normalize_rows_backward(unit, norms, grad_unit):
    """Pull a gradient back through row normalization.

    d/dv (v/|v|) applied to an upstream gradient g is (g - u <u, g>) / |v|
    with u = v/|v|. Rows treated as zero get a zero gradient.
    """
    inner = np.sum(unit * grad_unit, axis=1, keepdims=True)
    safe = np.where(norms > EPSILON, norms, 1.0)
    grad = (grad_unit - unit * inner) / safe[:, None]
    grad[norms <= EPSILON, :] = 0.0
    return grad


def _normalize_cols_backward(unit, norms, grad_unit):
    inner = np.sum(unit * grad_unit, axis=0, keepdims=True)
    safe = np.where(norms > EPSILON, norms, 1.0)
    grad = (grad_unit - unit * inner) / safe[None, :]
    grad[:, norms <= EPSILON] = 0.0
    return grad


def scaled_cosine_logits(e, w, sigma: float) -> np.ndarray:
    """Logits sigma * <e_hat, w_hat>: rows of e and columns of w unit-normalized."""
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    e_hat = tensor.l2_normalize_rows(e)
    w_hat = tensor.l2_normalize_columns(w)
    return sigma * tensor.matmul(e_hat, w_hat)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-softmax of the target class, with its logit gradient.

    Stabilized by per-row max subtraction; the gradient is
    (softmax - onehot) / batch_size.
    """
    logits = as_matrix(logits)
    labels = as_labels(labels, logits.shape[1])
    if labels.shape[0] != logits.shape[0]:
        raise ConfigError(
            f"got {labels.shape[0]} labels for {logits.shape[0]} logit rows"
        )
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    loss = float(-np.mean(log_probs[np.arange(batch), labels]))
    grad = np.exp(log_probs)
    grad[np.arange(batch), labels] -= 1.0
    return loss, grad / batch


def hyperplane_normals(w_hat, labels) -> np.ndarray:
    """Unit normals of each sample's target-class separation hyperplanes.

    Slice i, column j is (w_hat[:, labels[i]] - w_hat[:, j]) normalized over
    the feature axis; the target column j == labels[i] is the zero vector.
    """
    w_hat = as_matrix(w_hat)
    labels = as_labels(labels, w_hat.shape[1])
    batch = labels.shape[0]
    expanded = tensor.broadcast_weights(w_hat, batch)
    targets = tensor.gather_target_columns(w_hat, labels, replicate_to=w_hat.shape[1])
    raw = targets - expanded
    norms = np.sqrt(np.sum(raw * raw, axis=1))  # B x C
    unit = raw / np.where(norms > EPSILON, norms, 1.0)[:, None, :]
    unit[np.broadcast_to((norms <= EPSILON)[:, None, :], raw.shape)] = 0.0
    return unit


def hyperplane_projections(e_hat, h_hat) -> np.ndarray:
    """Projections of unit embeddings onto their per-sample unit normals."""
    return tensor.batched_contract(e_hat, h_hat)


def hinge_cost(projections, margin: float, labels) -> tuple[np.ndarray, float]:
    """Relaxed hinge margin - min(p, margin) per projection, target column masked.

    Returns the per-entry cost matrix and its batch mean (sum over classes,
    mean over samples).
    """
    projections = as_matrix(projections)
    if not 0 < margin <= 1:
        raise ConfigError(f"margin must lie in (0, 1], got {margin}")
    labels = as_labels(labels, projections.shape[1])
    batch = projections.shape[0]
    costs = np.maximum(margin - projections, 0.0)
    costs[np.arange(batch), labels] = 0.0
    return costs, float(costs.sum() / batch)


def _prepare(e, w, labels):
    e = as_matrix(e)
    w = as_matrix(w)
    if e.shape[1] != w.shape[0]:
        raise ConfigError(
            f"embedding dim {e.shape[1]} does not match weight rows {w.shape[0]}"
        )
    labels = as_labels(labels, w.shape[1])
    if labels.shape[0] != e.shape[0]:
        raise ConfigError(
            f"got {labels.shape[0]} labels for batch of {e.shape[0]}"
        )
    return e, w, labels


def haseparator_loss(e, w, labels, config: LossConfig) -> LossResult:
    """Cross-entropy on scaled cosine logits plus the hyperplane hinge cost."""
    e, w, labels = _prepare(e, w, labels)
    if w.shape[1] < 2:
        raise ConfigError("separator loss needs at least 2 classes")
    sigma, margin = config.sigma, config.margin
    batch, num_classes = e.shape[0], w.shape[1]
    rows = np.arange(batch)

    e_hat, e_norms = _normalize_rows(e)
    w_hat, w_norms = _normalize_cols(w)

    logits = sigma * (e_hat @ w_hat)
    ce_loss, grad_logits = softmax_cross_entropy(logits, labels)

    # Hyperplane normals, kept in raw/unit form for the backward pass.
    targets = w_hat[:, labels].T  # B x N
    raw = targets[:, :, None] - w_hat[None, :, :]  # B x N x C
    h_norms = np.sqrt(np.sum(raw * raw, axis=1))  # B x C
    h_safe = np.where(h_norms > EPSILON, h_norms, 1.0)
    h_hat = raw / h_safe[:, None, :]
    h_hat[np.broadcast_to((h_norms <= EPSILON)[:, None, :], raw.shape)] = 0.0

    projections = np.einsum("ik,ikj->ij", e_hat, h_hat)
    costs, separator_loss = hinge_cost(projections, margin, labels)

    # Hinge subgradient: -1/B on active non-target entries, 0 elsewhere
    # (including exactly at the kink p == margin).
    active = projections < margin
    active[rows, labels] = False
    grad_proj = np.where(active, -1.0 / batch, 0.0)

    grad_e_hat = sigma * (grad_logits @ w_hat.T)
    grad_e_hat += np.einsum("ij,ikj->ik", grad_proj, h_hat)

    grad_h_hat = np.einsum("ij,ik->ikj", grad_proj, e_hat)
    inner = np.sum(h_hat * grad_h_hat, axis=1, keepdims=True)  # B x 1 x C
    grad_raw = (grad_h_hat - h_hat * inner) / h_safe[:, None, :]
    grad_raw[np.broadcast_to((h_norms <= EPSILON)[:, None, :], raw.shape)] = 0.0

    grad_w_hat = sigma * (e_hat.T @ grad_logits)
    grad_w_hat -= grad_raw.sum(axis=0)
    np.add.at(grad_w_hat.T, labels, grad_raw.sum(axis=2))

    grad_e = _normalize_rows_backward(e_hat, e_norms, grad_e_hat)
    grad_w = _normalize_cols_backward(w_hat, w_norms, grad_w_hat)

    return LossResult(
        total_loss=ce_loss + separator_loss,
        ce_loss=ce_loss,
        separator_loss=separator_loss,
        logits=logits,
        projections=projections,
        grad_embeddings=grad_e,
        grad_weights=grad_w,
    )


def _cosine_head_loss(e, w, labels, sigma, arc_margin):
    """Shared softmax/arcface path; arc_margin == 0 is the plain softmax head."""
    e, w, labels = _prepare(e, w, labels)
    batch = e.shape[0]
    rows = np.arange(batch)

    e_hat, e_norms = _normalize_rows(e)
    w_hat, w_norms = _normalize_cols(w)
    cosines = e_hat @ w_hat

    if arc_margin > 0:
        target_cos = cosines[rows, labels]
        clamped = np.clip(target_cos, -1.0 + _COS_CLAMP, 1.0 - _COS_CLAMP)
        theta = np.arccos(clamped)
        theta_kept = np.minimum(theta, math.pi - arc_margin)
        logits = sigma * cosines
        logits[rows, labels] = sigma * np.cos(theta_kept + arc_margin)
    else:
        logits = sigma * cosines

    ce_loss, grad_logits = softmax_cross_entropy(logits, labels)

    grad_cos = sigma * grad_logits
    if arc_margin > 0:
        # d logit / d cos on the target entries; zero wherever either clamp
        # (cosine range or angle cap) is active.
        live = (np.abs(target_cos) < 1.0 - _COS_CLAMP) & (theta < math.pi - arc_margin)
        slope = np.where(
            live,
            sigma * np.sin(theta_kept + arc_margin) / np.sqrt(1.0 - clamped**2),
            0.0,
        )
        grad_cos[rows, labels] = grad_logits[rows, labels] * slope

    grad_e = _normalize_rows_backward(e_hat, e_norms, grad_cos @ w_hat.T)
    grad_w = _normalize_cols_backward(w_hat, w_norms, e_hat.T @ grad_cos)

    return LossResult(
        total_loss=ce_loss,
        ce_loss=ce_loss,
        separator_loss=0.0,
        logits=logits,
        projections=None,
        grad_embeddings=grad_e,
        grad_weights=grad_w,
    )


def softmax_loss(e, w, labels, config: LossConfig) -> LossResult:
    """Plain softmax cross-entropy on scaled cosine logits."""
    return _cosine_head_loss(e, w, labels, config.sigma, 0.0)


def arcface_loss(e, w, labels, config: LossConfig) -> LossResult:
    """Additive angular margin on the target class before the cosine.

    The target cosine is clamped before arccos, and the target angle is
    capped at pi - arc_margin so the shifted angle stays within [0, pi].
    With arc_margin == 0 this follows exactly the softmax code path.
    """
    if not 0 <= config.arc_margin < math.pi / 2:
        raise ConfigError(
            f"arc_margin must lie in [0, pi/2), got {config.arc_margin}"
        )
    return _cosine_head_loss(e, w, labels, config.sigma, config.arc_margin)


def compute_loss(e, w, labels, config: LossConfig) -> LossResult:
    """Dispatch on config.loss_kind."""
    if config.loss_kind == SOFTMAX:
        return softmax_loss(e, w, labels, config)
    if config.loss_kind == HASEPARATOR:
        return haseparator_loss(e, w, labels, config)
    if config.loss_kind == ARCFACE:
        return arcface_loss(e, w, labels, config)
    raise ConfigError(f"unknown loss_kind {config.loss_kind!r}")
