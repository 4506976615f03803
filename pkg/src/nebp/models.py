"""Transition, measurement and likelihood-ratio models."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.stats import chi2

from .types import MEAS_DIM, STATE_DIM, InputError, KinematicState

#: selects (position, velocity) from a CA state
H = np.hstack([np.eye(MEAS_DIM), np.zeros((MEAS_DIM, 2))])


@dataclass(frozen=True)
class MotionModel:
    """Constant-acceleration dynamics with survival.

    ``accel_noise_std`` is the std of the per-step white acceleration increment.
    """

    dt: float = 0.5
    accel_noise_std: float = 0.1
    survival_prob: float = 0.99

    def __post_init__(self):
        if not self.dt > 0:
            raise InputError("dt must be positive")
        if not 0.0 <= self.survival_prob <= 1.0:
            raise InputError("survival_prob must lie in [0, 1]")
        if self.accel_noise_std < 0:
            raise InputError("accel_noise_std must be non-negative")

    def transition_matrix(self) -> np.ndarray:
        dt = self.dt
        F = np.eye(STATE_DIM)
        F[0, 2] = F[1, 3] = F[2, 4] = F[3, 5] = dt
        F[0, 4] = F[1, 5] = 0.5 * dt * dt
        return F

    def noise_covariance(self) -> np.ndarray:
        Q = np.zeros((STATE_DIM, STATE_DIM))
        Q[4, 4] = Q[5, 5] = self.accel_noise_std**2
        return Q

    def propagate(self, states: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
        """Propagate an (N, 6) array of states one step; ``rng=None`` means noise-free."""
        out = states @ self.transition_matrix().T
        if rng is not None and self.accel_noise_std > 0:
            out[:, 4:6] += self.accel_noise_std * rng.standard_normal((states.shape[0], 2))
        return out


def sample_transition(state: KinematicState, model: MotionModel,
                      rng: np.random.Generator | None) -> KinematicState:
    x = model.propagate(state.to_vector()[None, :], rng)
    return KinematicState.from_vector(x[0])


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Linear-Gaussian detections of (position, velocity) plus Poisson clutter and births.

    Clutter and birth densities are uniform over the ROI square (half-width
    ``roi_half_width`` about the ego position) times the velocity box
    ``[-max_speed, max_speed]^2``.
    """

    detection_prob: float = 0.9
    noise_cov: np.ndarray = field(default_factory=lambda: np.diag([0.25, 0.25, 0.25, 0.25]))
    clutter_mean: float = 5.0
    birth_mean: float = 0.05
    roi_half_width: float = 54.0
    max_speed: float = 15.0
    gate_prob: float = 0.999

    def __post_init__(self):
        R = np.asarray(self.noise_cov, dtype=float)
        if R.shape != (MEAS_DIM, MEAS_DIM):
            raise InputError("noise_cov must be 4x4")
        if not np.allclose(R, R.T) or np.any(np.linalg.eigvalsh(R) <= 0):
            raise InputError("noise_cov must be symmetric positive definite")
        if not 0.0 <= self.detection_prob <= 1.0:
            raise InputError("detection_prob must lie in [0, 1]")
        if self.clutter_mean < 0 or self.birth_mean < 0:
            raise InputError("clutter_mean and birth_mean must be non-negative")
        if self.roi_half_width <= 0 or self.max_speed <= 0:
            raise InputError("ROI extents must be positive")
        object.__setattr__(self, "noise_cov", R)
        object.__setattr__(self, "_chol", np.linalg.cholesky(R))

    @cached_property
    def gate_threshold(self) -> float:
        return float(chi2.ppf(self.gate_prob, MEAS_DIM))

    def uniform_density(self) -> float:
        """Density of the uniform law over ROI x velocity box (position and velocity, 4-D)."""
        return 1.0 / ((2.0 * self.roi_half_width) ** 2 * (2.0 * self.max_speed) ** 2)

    def clutter_intensity(self) -> float:
        """mu_FA * f_FA; constant because f_FA is uniform."""
        return self.clutter_mean * self.uniform_density()

    def in_support(self, xz: np.ndarray, ego=(0.0, 0.0)) -> np.ndarray:
        """Whether the position/velocity part of states or measurements lies in the ROI box."""
        xz = np.atleast_2d(xz)
        pos = np.abs(xz[:, 0:2] - np.asarray(ego)) <= self.roi_half_width
        vel = np.abs(xz[:, 2:4]) <= self.max_speed
        return np.all(pos, axis=1) & np.all(vel, axis=1)

    def in_roi(self, xz: np.ndarray, ego=(0.0, 0.0)) -> np.ndarray:
        xz = np.atleast_2d(xz)
        return np.all(np.abs(xz[:, 0:2] - np.asarray(ego)) <= self.roi_half_width, axis=1)

    def log_density(self, z: np.ndarray, states: np.ndarray) -> np.ndarray:
        """log f(z | x) for one measurement ``z`` (4,) and states (N, 6) -> (N,)."""
        d = np.asarray(z, dtype=float)[None, :] - np.atleast_2d(states)[:, :MEAS_DIM]
        y = np.linalg.solve(self._chol, d.T)
        maha = np.einsum("ij,ij->j", y, y)
        logdet = 2.0 * np.log(np.diag(self._chol)).sum()
        return -0.5 * (maha + logdet + MEAS_DIM * np.log(2.0 * np.pi))

    def density(self, z: np.ndarray, states: np.ndarray) -> np.ndarray:
        return np.exp(self.log_density(z, states))


def measurement_density(z, x: KinematicState, model: MeasurementModel) -> float:
    return float(model.density(z, x.to_vector()[None, :])[0])


def legacy_likelihood_ratio(density: float, existence: int, a: int, num_meas: int,
                            detection_prob: float, clutter_intensity: float) -> float:
    """q(x, r, a) for a legacy PO.

    ``density`` is f(z_a | x) and is only read when ``a > 0``;
    ``clutter_intensity`` is mu_FA * f_FA(z_a).
    """
    if not 0 <= a <= num_meas:
        raise InputError(f"association index {a} outside 0..{num_meas}")
    if existence == 0:
        return 1.0 if a == 0 else 0.0
    if a == 0:
        return 1.0 - detection_prob
    return detection_prob * density / clutter_intensity


def new_po_likelihood_ratio(birth_density: float, density: float, existence: int, b: int,
                            num_legacy: int, birth_mean: float, clutter_intensity: float,
                            dummy_density: float = 1.0) -> float:
    """v(x, r, b) for the new PO of one measurement.

    ``birth_density`` is f_u(x) and ``density`` is f(z | x). For ``r=0`` the
    dummy density value is returned; it integrates to one and only enters
    through normalization.
    """
    if not 0 <= b <= num_legacy:
        raise InputError(f"association index {b} outside 0..{num_legacy}")
    if existence == 0:
        return dummy_density
    if b != 0:
        return 0.0
    return birth_mean * birth_density * density / clutter_intensity


def predicted_gate(z: np.ndarray, mean: np.ndarray, cov: np.ndarray,
                   model: MeasurementModel) -> np.ndarray:
    """Boolean mask of measurements (J, 4) inside the chi-square gate of a predicted PO."""
    if z.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    S = H @ cov @ H.T + model.noise_cov
    d = z - H @ mean
    maha = np.einsum("ji,ik,jk->j", d, np.linalg.inv(S), d)
    return maha <= model.gate_threshold
