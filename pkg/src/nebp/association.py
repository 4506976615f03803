"""Iterative probabilistic data association and its exact enumeration oracle.

Messages between the legacy-PO side and the new-PO side are binary-valued
(does object ``i`` take measurement ``j`` or not), so each is stored as the
ratio of its two values.  ``phi[i, j]`` is the ratio sent by legacy PO ``i``
to measurement ``j``; ``eps[i, j]`` the ratio sent back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .types import DegenerateInputError, InputError, association_events

#: relative floor for zero "no association" entries; keeps ratios finite
_ZERO_FLOOR = 1e-100
MAX_ENUMERATION_SIZE = 8


class InstanceTooLargeError(InputError):
    pass


@dataclass
class AssociationProblem:
    """Inputs of one association step.

    beta: (I, J+1), ``beta[i, a]`` for ``a = 0..J``.
    xi: (J, I+1), ``xi[j, b]`` for ``b = 0..I``.
    """

    beta: np.ndarray
    xi: np.ndarray
    max_iter: int = 20
    tol: float = 1e-6

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        num_obj = self.beta.shape[0] if self.beta.ndim == 2 else 0
        num_meas = self.xi.shape[0] if self.xi.ndim == 2 else 0
        if self.beta.size == 0:
            self.beta = self.beta.reshape(num_obj, num_meas + 1) if num_obj else np.zeros((0, num_meas + 1))
        if self.xi.size == 0:
            self.xi = self.xi.reshape(num_meas, num_obj + 1) if num_meas else np.zeros((0, num_obj + 1))
        if self.beta.shape != (num_obj, num_meas + 1) or self.xi.shape != (num_meas, num_obj + 1):
            raise InputError(f"inconsistent shapes beta {self.beta.shape}, xi {self.xi.shape}")
        for name, m in (("beta", self.beta), ("xi", self.xi)):
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise InputError(f"{name} must be finite and non-negative")
        if self.max_iter < 1:
            raise InputError("max_iter must be positive")

    @property
    def num_objects(self) -> int:
        return self.beta.shape[0]

    @property
    def num_measurements(self) -> int:
        return self.xi.shape[0]


@dataclass
class AssociationResult:
    legacy_marginals: np.ndarray  # (I, J+1)
    new_marginals: np.ndarray  # (J, I+1)
    phi: np.ndarray  # (I, J)
    eps: np.ndarray  # (I, J)
    iterations: int = 0
    changes: list = field(default_factory=list)


def _sum_excluding(t: np.ndarray, axis: int) -> np.ndarray:
    """For each entry, the sum along ``axis`` of all other entries (no cancellation)."""
    t = np.moveaxis(t, axis, -1)
    zeros = np.zeros(t.shape[:-1] + (1,))
    left = np.concatenate([zeros, np.cumsum(t, axis=-1)[..., :-1]], axis=-1)
    right = np.concatenate([np.cumsum(t[..., ::-1], axis=-1)[..., ::-1][..., 1:], zeros], axis=-1)
    return np.moveaxis(left + right, -1, axis)


def _floored(col: np.ndarray, rows: np.ndarray) -> np.ndarray:
    floor = _ZERO_FLOOR * rows.max(axis=1)
    return np.maximum(col, floor)


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    return m / m.sum(axis=1, keepdims=True)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    if new.size == 0:
        return 0.0
    scale = np.maximum(np.abs(new), np.abs(old))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(scale > 0, np.abs(new - old) / scale, 0.0)
    return float(r.max())


def iterate_association(problem: AssociationProblem) -> AssociationResult:
    """Loopy BP over the association factors; returns approximate marginals.

    Each iteration first sends measurement-to-object messages computed from
    the previous object-to-measurement messages, then the reverse.  Stops
    after ``max_iter`` iterations or when the largest relative message change
    drops below ``tol``.
    """
    beta, xi = problem.beta, problem.xi
    num_obj, num_meas = problem.num_objects, problem.num_measurements
    if np.any(beta.sum(axis=1) == 0) or np.any(xi.sum(axis=1) == 0):
        raise DegenerateInputError("an all-zero beta or xi row carries no probability mass")
    if num_obj == 0 or num_meas == 0:
        return AssociationResult(
            legacy_marginals=_normalize_rows(beta),
            new_marginals=_normalize_rows(xi),
            phi=np.ones((num_obj, num_meas)),
            eps=np.ones((num_obj, num_meas)),
        )

    beta0 = _floored(beta[:, 0], beta)
    xi0 = _floored(xi[:, 0], xi)
    b = beta[:, 1:]  # (I, J)
    x = xi[:, 1:].T  # (I, J): x[i, j] = xi_j(i)

    phi = np.ones((num_obj, num_meas))
    eps = np.ones((num_obj, num_meas))
    changes = []
    it = 0
    for it in range(1, problem.max_iter + 1):
        t = x * phi
        eps_new = x / (xi0[None, :] + _sum_excluding(t, axis=0))
        s = b * eps_new
        phi_new = b / (beta0[:, None] + _sum_excluding(s, axis=1))
        change = max(_rel_change(phi_new, phi), _rel_change(eps_new, eps))
        phi, eps = phi_new, eps_new
        changes.append(change)
        if change < problem.tol:
            break

    legacy = np.concatenate([beta0[:, None], b * eps], axis=1)
    new = np.concatenate([xi0[:, None], (x * phi).T], axis=1)
    return AssociationResult(
        legacy_marginals=_normalize_rows(legacy),
        new_marginals=_normalize_rows(new),
        phi=phi,
        eps=eps,
        iterations=it,
        changes=changes,
    )


def exact_association_marginals(beta, xi) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force marginals p(a_i) and p(b_j) over all valid association events."""
    beta = np.asarray(beta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    num_obj, num_meas = beta.shape[0], xi.shape[0]
    if num_obj > MAX_ENUMERATION_SIZE or num_meas > MAX_ENUMERATION_SIZE:
        raise InstanceTooLargeError(
            f"enumeration limited to I, J <= {MAX_ENUMERATION_SIZE}, got I={num_obj}, J={num_meas}")
    pa = np.zeros((num_obj, num_meas + 1))
    pb = np.zeros((num_meas, num_obj + 1))
    rows_o = np.arange(num_obj)
    rows_m = np.arange(num_meas)
    total = 0.0
    for a, b in association_events(num_obj, num_meas):
        w = math.prod(beta[rows_o, a]) * math.prod(xi[rows_m, b])
        if w == 0.0:
            continue
        total += w
        pa[rows_o, a] += w
        pb[rows_m, b] += w
    if total == 0.0:
        raise DegenerateInputError("no valid association event has positive weight")
    return pa / total, pb / total
