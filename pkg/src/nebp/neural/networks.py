"""The network stack that reweights BP messages, and its forward/backward passes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..types import BOX_DIM, HEAT_DIM, MEAS_DIM, SHAPE_DIM, InputError
from .mlp import MLP

#: order of the similarity branches; the last weight goes to the BP ratio
BRANCHES = ("motion", "box", "shape", "heat")
BRANCH_DIMS = {"motion": MEAS_DIM, "box": BOX_DIM, "shape": SHAPE_DIM, "heat": HEAT_DIM}
PAIR_DIM = sum(BRANCH_DIMS.values())
APPEARANCE_DIM = BOX_DIM + SHAPE_DIM + HEAT_DIM
NUM_WEIGHTS = len(BRANCHES) + 1
NETWORK_ORDER = ("motion", "box", "shape", "heat", "weight", "affinity", "far")

COEFF_FLOOR = 1e-12
# sigmoid(40.0) rounds to exactly 1.0 in float64
_SATURATED = 40.0


@dataclass(frozen=True)
class NetworkSizes:
    similarity_hidden: tuple = (32, 32)
    weight_hidden: tuple = (64, 64)
    affinity_hidden: tuple = (16,)
    far_hidden: tuple = (64, 64)
    leaky_slope: float = 0.01


@dataclass
class NeuralStack:
    motion: MLP
    box: MLP
    shape: MLP
    heat: MLP
    weight: MLP
    affinity: MLP
    far: MLP

    @classmethod
    def init(cls, rng: np.random.Generator, sizes: NetworkSizes = NetworkSizes()) -> "NeuralStack":
        s = sizes.leaky_slope
        nets = {b: MLP.init([BRANCH_DIMS[b], *sizes.similarity_hidden, 1], rng, slope=s)
                for b in BRANCHES}
        nets["weight"] = MLP.init([PAIR_DIM, *sizes.weight_hidden, NUM_WEIGHTS], rng, "sigmoid", s)
        nets["affinity"] = MLP.init([1, *sizes.affinity_hidden, 1], rng, slope=s)
        nets["far"] = MLP.init([APPEARANCE_DIM, *sizes.far_hidden, 1], rng, "sigmoid", s)
        return cls(**nets)

    def identity_reduction(self) -> "NeuralStack":
        """Copy whose false-alarm output is exactly 1 and whose affinity is negative.

        With these outputs every enhancement coefficient is 1 and the tracker
        reproduces plain BP bit for bit.
        """
        out = self.copy()
        for net, bias in ((out.far, _SATURATED), (out.affinity, -1.0)):
            for w in net.weights:
                w[...] = 0.0
            for b in net.biases:
                b[...] = 0.0
            net.biases[-1][...] = bias
        return out

    def networks(self) -> list[MLP]:
        return [getattr(self, n) for n in NETWORK_ORDER]

    def copy(self) -> "NeuralStack":
        return NeuralStack(*(n.copy() for n in self.networks()))

    def params(self) -> list[np.ndarray]:
        return [p for net in self.networks() for p in net.params()]


# ---------------------------------------------------------------------------
# feature extraction


@dataclass
class Features:
    """Per-object features; ``shape``/``heat`` rows are NaN when unavailable."""

    motion: np.ndarray  # (n, 4)
    box: np.ndarray  # (n, 3)
    shape: np.ndarray  # (n, 64)
    heat: np.ndarray  # (n, 32)

    def __len__(self):
        return self.motion.shape[0]

    @staticmethod
    def _rows(values, dim, n):
        out = np.full((n, dim), np.nan)
        for k, v in enumerate(values):
            if v is not None:
                out[k] = v
        return out

    @classmethod
    def from_measurements(cls, measurements) -> "Features":
        n = len(measurements)
        return cls(np.array([m.kinematic for m in measurements]).reshape(n, MEAS_DIM),
                   np.array([m.box for m in measurements]).reshape(n, BOX_DIM),
                   cls._rows([m.shape for m in measurements], SHAPE_DIM, n),
                   cls._rows([m.heat for m in measurements], HEAT_DIM, n))

    @classmethod
    def from_pos(cls, pos) -> "Features":
        n = len(pos)
        motion = np.array([po.mean()[:MEAS_DIM] for po in pos]).reshape(n, MEAS_DIM)
        box = np.array([po.box if po.box is not None else np.full(BOX_DIM, np.nan)
                        for po in pos]).reshape(n, BOX_DIM)
        return cls(motion, box, cls._rows([po.shape for po in pos], SHAPE_DIM, n),
                   cls._rows([po.heat for po in pos], HEAT_DIM, n))


@dataclass
class PairInputs:
    """Flattened (i, j) pairs in row-major order over an (I, J) grid."""

    diffs: dict  # branch -> (P, dim), zero where missing
    available: np.ndarray  # (P, 4) bool per branch
    bp_ratio: np.ndarray  # (P,)
    grid: tuple

    @property
    def omega_input(self) -> np.ndarray:
        return np.hstack([self.diffs[b] for b in BRANCHES])

    def subset(self, mask) -> "PairInputs":
        """Only the pairs where ``mask`` (I, J) holds, as a flat (n, 1) grid."""
        keep = np.asarray(mask, bool).reshape(-1)
        return PairInputs({b: d[keep] for b, d in self.diffs.items()}, self.available[keep],
                          self.bp_ratio[keep], (int(keep.sum()), 1))


def pair_inputs(pos: Features, meas: Features, bp_ratio: np.ndarray) -> PairInputs:
    I, J = len(pos), len(meas)
    bp_ratio = np.asarray(bp_ratio, dtype=float)
    if bp_ratio.shape != (I, J):
        raise InputError(f"bp ratio shape {bp_ratio.shape} != ({I}, {J})")
    diffs, avail = {}, []
    for b in BRANCHES:
        d = (getattr(pos, b)[:, None, :] - getattr(meas, b)[None, :, :]).reshape(I * J, -1)
        ok = ~np.isnan(d).any(axis=1)
        d[~ok] = 0.0
        diffs[b] = d
        avail.append(ok)
    return PairInputs(diffs, np.stack(avail, axis=1), bp_ratio.reshape(-1), (I, J))


# ---------------------------------------------------------------------------
# forward / backward


@dataclass
class AffinityPass:
    inputs: PairInputs
    similarities: np.ndarray  # (P, 5) with the BP ratio last
    omega: np.ndarray  # (P, 5) after masking
    combined: np.ndarray  # (P,)
    f_rho: np.ndarray  # (I, J)
    caches: dict = field(default_factory=dict)


def affinity_forward(stack: NeuralStack, inputs: PairInputs, keep_cache: bool = False) -> AffinityPass:
    P = inputs.bp_ratio.size
    caches = {}
    sims = np.empty((P, NUM_WEIGHTS))
    for k, b in enumerate(BRANCHES):
        c = [] if keep_cache else None
        sims[:, k] = getattr(stack, b).forward(inputs.diffs[b], c)[:, 0] if P else 0.0
        caches[b] = c
    sims[:, -1] = inputs.bp_ratio
    c = [] if keep_cache else None
    omega = stack.weight.forward(inputs.omega_input, c) if P else np.zeros((0, NUM_WEIGHTS))
    caches["weight"] = c
    if not inputs.available.all():
        # drop missing branches and rescale the rest so the total weight is unchanged
        mask = np.hstack([inputs.available, np.ones((P, 1), bool)])
        kept = np.where(mask, omega, 0.0)
        tot, tot_kept = omega.sum(axis=1), kept.sum(axis=1)
        scale = np.divide(tot, tot_kept, out=np.ones(P), where=tot_kept > 0)
        omega = kept * scale[:, None]
        sims = np.where(mask, sims, 0.0)
    combined = np.sum(omega * sims, axis=1)
    c = [] if keep_cache else None
    f = stack.affinity.forward(combined[:, None], c)[:, 0] if P else np.zeros(0)
    caches["affinity"] = c
    return AffinityPass(inputs, sims, omega, combined, f.reshape(inputs.grid), caches)


def affinity_backward(stack: NeuralStack, fwd: AffinityPass, d_f_rho: np.ndarray) -> dict:
    """Parameter gradients of ``sum(d_f_rho * f_rho)`` keyed by network name.

    Assumes every branch is available (training data always carries features).
    """
    g = np.asarray(d_f_rho, dtype=float).reshape(-1, 1)
    grads = {"affinity": stack.affinity.backward(fwd.caches["affinity"], g)}
    d_comb = grads["affinity"].input[:, 0]
    d_omega = d_comb[:, None] * fwd.similarities
    d_sims = d_comb[:, None] * fwd.omega
    grads["weight"] = stack.weight.backward(fwd.caches["weight"], d_omega)
    for k, b in enumerate(BRANCHES):
        grads[b] = getattr(stack, b).backward(fwd.caches[b], d_sims[:, k:k + 1])
    return grads


def far_input(meas: Features) -> np.ndarray:
    x = np.hstack([meas.box, meas.shape, meas.heat])
    if np.isnan(x).any():
        raise InputError("false-alarm network needs box, shape and heat features for every measurement")
    return x


def false_alarm_coefficients(stack: NeuralStack, meas: Features) -> np.ndarray:
    if len(meas) == 0:
        return np.zeros(0)
    return stack.far.forward(far_input(meas))[:, 0]


def affinity_coefficients(stack: NeuralStack, pos: Features, meas: Features,
                          bp_ratio: np.ndarray) -> np.ndarray:
    return affinity_forward(stack, pair_inputs(pos, meas, bp_ratio)).f_rho


# ---------------------------------------------------------------------------
# message enhancement


def normalized_beta(beta: np.ndarray) -> np.ndarray:
    """Rows of ``beta`` scaled to sum to one (the r=0/a=0 entry included)."""
    beta = np.asarray(beta, dtype=float)
    tot = beta.sum(axis=1, keepdims=True)
    if np.any(tot <= 0):
        raise InputError("every beta row needs positive mass")
    return beta / tot


def coefficient_matrix(f_rho, f_omega, beta) -> np.ndarray:
    """Multiplier ``C`` with ``C[i, j] * beta[i, j+1]`` the enhanced association ratio."""
    bh = normalized_beta(beta)[:, 1:]
    return np.asarray(f_omega)[None, :] + np.maximum(f_rho, 0.0) / np.maximum(bh, COEFF_FLOOR)


def enhance_messages(beta, birth_mass, f_rho, f_omega):
    """Enhanced legacy rows (normalized) and enhanced birth masses.

    Legacy: ``q[i, 0]`` is kept and ``q[i, j]`` becomes ``f_omega[j] q[i, j] +
    relu(f_rho[i, j])``, with q the normalized row; the result is renormalized.
    New POs: the birth mass is scaled by ``f_omega``.
    """
    q = normalized_beta(beta)
    out = q.copy()
    out[:, 1:] = coefficient_matrix(f_rho, f_omega, beta) * q[:, 1:]
    out /= out.sum(axis=1, keepdims=True)
    return out, np.asarray(f_omega) * np.asarray(birth_mass, dtype=float)


class NeuralEnhancer:
    """Tracker hook producing (C, f_omega) from the network stack.

    ``use_affinity`` / ``use_far`` switch the two corrections off for ablations.
    """

    def __init__(self, stack: NeuralStack, use_affinity: bool = True, use_far: bool = True):
        self.stack = stack
        self.use_affinity = use_affinity
        self.use_far = use_far

    def __call__(self, data) -> tuple[np.ndarray, np.ndarray]:
        I, J = len(data.legacy), len(data.measurements)
        meas = Features.from_measurements(data.measurements)
        f_omega = false_alarm_coefficients(self.stack, meas) if self.use_far else np.ones(J)
        if not (self.use_affinity and I):
            return np.tile(f_omega, (I, 1)), f_omega
        f_rho = affinity_coefficients(self.stack, Features.from_pos(data.legacy), meas,
                                      normalized_beta(data.beta)[:, 1:])
        return coefficient_matrix(f_rho, f_omega, data.beta), f_omega
