"""Particle-based BP multi-object tracker: prediction, association, update, track management."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .association import AssociationProblem, AssociationResult, iterate_association
from .models import MeasurementModel, MotionModel, predicted_gate
from .types import (
    DegenerateInputError,
    InputError,
    KinematicState,
    Measurement,
    MeasurementFrame,
    POKind,
    PotentialObject,
    promote_new_to_legacy,
)


@dataclass(frozen=True)
class TrackManagerConfig:
    declare_threshold: float = 0.5
    prune_threshold: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.prune_threshold <= self.declare_threshold < 1.0:
            raise InputError("need 0 < prune_threshold <= declare_threshold < 1")


@dataclass(frozen=True)
class TrackerConfig:
    motion: MotionModel = field(default_factory=MotionModel)
    measurement: MeasurementModel = field(default_factory=MeasurementModel)
    manager: TrackManagerConfig = field(default_factory=TrackManagerConfig)
    num_particles: int = 10_000
    max_iter: int = 20
    tol: float = 1e-6
    birth_accel_std: float = 0.5

    def __post_init__(self):
        if self.num_particles < 1:
            raise InputError("num_particles must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be positive")


@dataclass(eq=False)
class Belief:
    po: PotentialObject
    association_marginal: np.ndarray


@dataclass(frozen=True)
class Estimate:
    track_id: int
    state: KinematicState
    score: float
    existence: float


@dataclass
class Gating:
    """Per-PO likelihood ratios p_d f(z_j|x_n) / (mu_FA f_FA) for in-gate measurements."""

    indices: np.ndarray  # gated measurement indices
    ratios: np.ndarray  # (len(indices), N)


@dataclass
class NewPOCandidate:
    po: PotentialObject
    birth_mass: float


@dataclass
class EnhancementInput:
    legacy: list
    measurements: list
    beta: np.ndarray


#: returns (C, f_omega) with shapes (I, J) and (J,)
Enhancer = Callable[[EnhancementInput], tuple]


@dataclass
class StepOutput:
    estimates: list
    beliefs: list
    legacy: list  # predicted legacy POs
    measurements: list  # measurements kept (inside the ROI)
    kept: np.ndarray  # frame indices of kept measurements
    beta: np.ndarray
    xi: np.ndarray
    association: Optional[AssociationResult] = None
    coefficients: Optional[tuple] = None


def predict(legacy: Sequence[PotentialObject], model: MotionModel,
            rng: np.random.Generator | None) -> list[PotentialObject]:
    """Propagate every particle and scale existence by the survival probability."""
    return [
        po.evolve(particles=model.propagate(po.particles, rng),
                  existence=model.survival_prob * po.existence)
        for po in legacy
    ]


def gate_and_evaluate(po: PotentialObject, z: np.ndarray, model: MeasurementModel) -> Gating:
    if z.shape[0] == 0:
        return Gating(np.zeros(0, dtype=int), np.zeros((0, po.num_particles)))
    idx = np.flatnonzero(predicted_gate(z, po.mean(), po.covariance(), model))
    scale = model.detection_prob / model.clutter_intensity()
    ratios = np.empty((idx.size, po.num_particles))
    for row, j in enumerate(idx):
        ratios[row] = scale * model.density(z[j], po.particles)
    return Gating(idx, ratios)


def compute_beta(po: PotentialObject, z: np.ndarray, model: MeasurementModel,
                 gating: Gating | None = None) -> np.ndarray:
    """Row ``beta[a]``, a = 0..J, for one predicted legacy PO."""
    if gating is None:
        gating = gate_and_evaluate(po, z, model)
    r = po.existence
    row = np.zeros(z.shape[0] + 1)
    row[0] = r * (1.0 - model.detection_prob) + (1.0 - r)
    if gating.indices.size:
        row[gating.indices + 1] = r * (gating.ratios @ po.weights)
    return row


def compute_xi(birth_mass: float, num_legacy: int, far_coeff: float = 1.0) -> np.ndarray:
    """Row ``xi[b]``, b = 0..I, for one new PO.

    ``birth_mass`` is the integral of the r=1, b=0 likelihood ratio; the
    other entries are the dummy-density contribution, which integrates to one.
    """
    row = np.ones(num_legacy + 1)
    row[0] = 1.0 + far_coeff * birth_mass
    return row


def birth_candidate(meas: Measurement, model: MeasurementModel, num_particles: int,
                    accel_std: float, track_id: int, ego, rng: np.random.Generator) -> NewPOCandidate:
    """New PO for one measurement via importance sampling around the measurement.

    Proposal: (position, velocity) ~ N(z, R), acceleration ~ N(0, accel_std^2).
    Because the proposal matches f(z|x) in the measured components, the
    importance weight reduces to the birth density f_u(x).
    """
    pv = meas.kinematic + rng.standard_normal((num_particles, 4)) @ model._chol.T
    acc = accel_std * rng.standard_normal((num_particles, 2))
    particles = np.hstack([pv, acc])
    inside = model.in_support(particles, ego).astype(float)
    frac = inside.mean()
    # both f_u and f_FA are the same uniform density
    birth_mass = model.birth_mean * frac / model.clutter_mean if model.clutter_mean > 0 else np.inf
    if frac > 0:
        weights = inside / inside.sum()
    else:
        weights = np.full(num_particles, 1.0 / num_particles)
    po = PotentialObject(particles=particles, weights=weights, existence=0.0, kind=POKind.NEW,
                         track_id=track_id, box=meas.box, shape=meas.shape, heat=meas.heat,
                         detection_score=meas.score)
    return NewPOCandidate(po, float(birth_mass))


def systematic_resample(particles: np.ndarray, weights: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return particles[np.searchsorted(cdf, positions)]


def _normalize(w: np.ndarray) -> np.ndarray:
    w = w / w.sum()
    # one more pass pins the sum to 1 within an ulp or two
    return w / w.sum()


def update_beliefs(legacy: Sequence[PotentialObject], gatings: Sequence[Gating],
                   candidates: Sequence[NewPOCandidate], result: AssociationResult,
                   model: MeasurementModel, coeff: np.ndarray, far: np.ndarray,
                   rng: np.random.Generator | None) -> list[Belief]:
    """Combine converged messages with the local likelihoods into beliefs.

    ``coeff`` (I, J) multiplies the r=1 association ratios of legacy POs and
    ``far`` (J,) the birth mass of new POs; both are ones for plain BP.
    """
    beliefs = []
    for i, (po, g) in enumerate(zip(legacy, gatings)):
        r = po.existence
        m = np.full(po.num_particles, 1.0 - model.detection_prob)
        if g.indices.size:
            factors = coeff[i, g.indices] * result.eps[i, g.indices]
            m = m + factors @ g.ratios
        lw = po.weights * m
        exist_mass = r * lw.sum()
        total = exist_mass + (1.0 - r)
        if not total > 0:
            raise DegenerateInputError(f"PO {po.track_id} has zero posterior mass")
        existence = exist_mass / total
        if lw.sum() > 0:
            weights = _normalize(lw)
        else:
            weights = po.weights
        particles = po.particles
        if rng is not None and 1.0 / np.sum(weights**2) < 0.5 * weights.size:
            particles = systematic_resample(particles, weights, rng)
            weights = np.full(weights.size, 1.0 / weights.size)
        marg = result.legacy_marginals[i]
        updated = po.evolve(particles=particles, weights=weights, existence=float(existence))
        beliefs.append(Belief(updated, marg))

    num_legacy = len(legacy)
    for j, cand in enumerate(candidates):
        marg = result.new_marginals[j]
        birth = far[j] * cand.birth_mass
        denom = 1.0 + birth
        if num_legacy:
            denom += float(result.phi[:, j].sum())
        existence = birth / denom if np.isfinite(birth) else 1.0
        po = cand.po
        weights = po.weights
        particles = po.particles
        if rng is not None and 1.0 / np.sum(weights**2) < 0.5 * weights.size:
            particles = systematic_resample(particles, weights, rng)
            weights = np.full(weights.size, 1.0 / weights.size)
        beliefs.append(Belief(po.evolve(particles=particles, weights=weights,
                                        existence=float(existence)), marg))
    return beliefs


def declare_estimate_prune(beliefs: Sequence[Belief], cfg: TrackManagerConfig):
    """Declared estimates and surviving POs (promoted to legacy)."""
    estimates = []
    survivors = []
    for b in beliefs:
        po = b.po
        if po.existence >= cfg.declare_threshold:
            estimates.append(Estimate(po.track_id, KinematicState.from_vector(po.mean()),
                                      po.detection_score * po.existence, po.existence))
        if po.existence >= cfg.prune_threshold:
            survivors.append(po)
    return estimates, promote_new_to_legacy(survivors)


def _refresh_appearance(po: PotentialObject, marginal: np.ndarray,
                        measurements: Sequence[Measurement]) -> PotentialObject:
    """Adopt score/shape/heat of the measurement a legacy PO most likely took.

    The box stays frozen at the value of the initiating measurement.
    """
    if marginal.size < 2:
        return po
    j = int(np.argmax(marginal[1:]))
    if marginal[j + 1] <= 0.5:
        return po
    m = measurements[j]
    return po.evolve(detection_score=m.score,
                     shape=m.shape if m.shape is not None else po.shape,
                     heat=m.heat if m.heat is not None else po.heat)


class Tracker:
    """Runs the BP recursion over a stream of measurement frames."""

    def __init__(self, config: TrackerConfig, rng: np.random.Generator,
                 enhancer: Enhancer | None = None):
        self.config = config
        self.rng = rng
        self.enhancer = enhancer
        self.legacy: list[PotentialObject] = []
        self._ids = itertools.count(1)

    def step(self, frame: MeasurementFrame) -> StepOutput:
        cfg = self.config
        model = cfg.measurement
        legacy = predict(self.legacy, cfg.motion, self.rng)

        kin = frame.kinematics()
        kept = np.flatnonzero(model.in_roi(kin, frame.ego)) if len(frame) else np.zeros(0, dtype=int)
        measurements = [frame.measurements[j] for j in kept]
        z = kin[kept] if kept.size else np.zeros((0, 4))
        num_obj, num_meas = len(legacy), len(measurements)

        gatings = [gate_and_evaluate(po, z, model) for po in legacy]
        beta = np.array([compute_beta(po, z, model, g) for po, g in zip(legacy, gatings)])
        beta = beta.reshape(num_obj, num_meas + 1)
        candidates = [
            birth_candidate(m, model, cfg.num_particles, cfg.birth_accel_std, next(self._ids),
                            frame.ego, self.rng)
            for m in measurements
        ]

        coeff = np.ones((num_obj, num_meas))
        far = np.ones(num_meas)
        coefficients = None
        if self.enhancer is not None and num_meas:
            coeff, far = self.enhancer(EnhancementInput(legacy, measurements, beta))
            coefficients = (coeff, far)

        beta_used = beta.copy()
        beta_used[:, 1:] = coeff * beta[:, 1:]
        xi = np.array([compute_xi(c.birth_mass, num_obj, far[j]) for j, c in enumerate(candidates)])
        xi = xi.reshape(num_meas, num_obj + 1)

        result = iterate_association(AssociationProblem(beta_used, xi, cfg.max_iter, cfg.tol))
        beliefs = update_beliefs(legacy, gatings, candidates, result, model, coeff, far, self.rng)
        for i in range(num_obj):
            b = beliefs[i]
            b.po = _refresh_appearance(b.po, b.association_marginal, measurements)

        estimates, survivors = declare_estimate_prune(beliefs, cfg.manager)
        self.legacy = survivors
        return StepOutput(estimates, beliefs, legacy, measurements, kept, beta, xi, result,
                          coefficients)

    def run(self, frames: Sequence[MeasurementFrame]) -> list[StepOutput]:
        return [self.step(f) for f in frames]
