"""Affinity and false-alarm losses with their gradients."""
from __future__ import annotations

import numpy as np

from ..types import InputError
from .mlp import sigmoid, softplus


def _labels(gt, shape):
    gt = np.asarray(gt)
    if gt.shape != shape:
        raise InputError(f"label shape {gt.shape} != {shape}")
    if not np.isin(gt, (0, 1)).all():
        raise InputError("labels must be 0 or 1")
    return gt.astype(bool)


def loss_affinity(f_rho, gt, mask=None) -> tuple[float, np.ndarray]:
    """Class-balanced cross-entropy on ``sigmoid(f_rho)`` and its gradient wrt ``f_rho``.

    Positive and negative pairs are averaged separately and the two means
    added, so neither class can swamp the other. ``mask`` restricts the
    pairs that count.
    """
    f = np.asarray(f_rho, dtype=float)
    pos = _labels(gt, f.shape)
    mask = np.ones(f.shape, bool) if mask is None else np.asarray(mask, bool)
    p, n = pos & mask, ~pos & mask
    P, N = int(p.sum()), int(n.sum())
    # -ln sigmoid(x) = softplus(-x), -ln(1 - sigmoid(x)) = softplus(x)
    loss = (softplus(-f[p]).sum() / P if P else 0.0) + (softplus(f[n]).sum() / N if N else 0.0)
    sig = sigmoid(f)
    grad = np.zeros_like(f)
    if P:
        grad[p] = (sig[p] - 1.0) / P
    if N:
        grad[n] = sig[n] / N
    return float(loss), grad


def _far_terms(pos, neg_logp, neg_log1mp, u):
    P, N = int(pos.sum()), int((~pos).sum())
    l1 = neg_logp[pos].sum() / P if P else 0.0
    l2 = u * neg_log1mp[~pos].sum() / N if N else 0.0
    return float(l1 + l2), P, N


def loss_far(f_omega, gt, u: float = 0.5) -> float:
    """Class-balanced false-alarm loss on probabilities in (0, 1).

    Detections of real objects (label 1) are pushed towards 1 and false
    alarms towards 0, the latter weighted by ``u``. A class with no members
    contributes nothing.
    """
    p = np.asarray(f_omega, dtype=float)
    pos = _labels(gt, p.shape)
    with np.errstate(divide="ignore"):
        return _far_terms(pos, -np.log(p), -np.log1p(-p), u)[0]


def loss_far_logits(logits, gt, u: float = 0.5) -> tuple[float, np.ndarray]:
    """Same loss evaluated from pre-sigmoid outputs, with gradient wrt the logits."""
    s = np.asarray(logits, dtype=float)
    pos = _labels(gt, s.shape)
    loss, P, N = _far_terms(pos, softplus(-s), softplus(s), u)
    sig = sigmoid(s)
    grad = np.zeros_like(s)
    if P:
        grad[pos] = (sig[pos] - 1.0) / P
    if N:
        grad[~pos] = u * sig[~pos] / N
    return loss, grad


def loss_far_grad(f_omega, gt, u: float = 0.5) -> np.ndarray:
    """Gradient of :func:`loss_far` with respect to the probabilities."""
    p = np.asarray(f_omega, dtype=float)
    pos = _labels(gt, p.shape)
    P, N = int(pos.sum()), int((~pos).sum())
    grad = np.zeros_like(p)
    if P:
        grad[pos] = -1.0 / (p[pos] * P)
    if N:
        grad[~pos] = u / ((1.0 - p[~pos]) * N)
    return grad
