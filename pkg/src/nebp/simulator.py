"""Synthetic scenarios and a detector emulator with appearance features and labels."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import H, MeasurementModel, MotionModel
from .rng import substream
from .types import HEAT_DIM, SHAPE_DIM, InputError, Measurement, MeasurementFrame

CLUTTER = -1

#: (name, nominal box [w, h, l] in m)
CLASSES = (
    ("car", (1.9, 1.7, 4.6)),
    ("pedestrian", (0.7, 1.8, 0.7)),
    ("truck", (2.5, 3.2, 8.0)),
)


def _class_prototypes():
    # fixed stream so every scenario shares the same appearance classes
    rng = np.random.default_rng(7_2024)
    return rng.normal(0.0, 1.0, (len(CLASSES), SHAPE_DIM + HEAT_DIM))


PROTOTYPES = _class_prototypes()


@dataclass(frozen=True)
class ScenarioConfig:
    duration: int = 100
    dt: float = 0.5
    initial_objects: int = 5
    birth_rate: float = 0.0
    survival_prob: float = 1.0
    accel_noise_std: float = 0.003
    spawn_half_width: float = 30.0
    speed_range: tuple = (0.2, 1.0)
    roi_half_width: float = 54.0
    appearance_spread: float = 0.5
    ego_velocity: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.duration < 1 or self.dt <= 0:
            raise InputError("duration and dt must be positive")
        if self.initial_objects < 0 or self.birth_rate < 0:
            raise InputError("object counts must be non-negative")
        if not 0.0 <= self.survival_prob <= 1.0:
            raise InputError("survival_prob must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorConfig:
    measurement: MeasurementModel = field(default_factory=MeasurementModel)
    #: multiplies the measurement-noise draw; 0 gives noise-free kinematics
    kinematic_noise_scale: float = 1.0
    box_noise_std: float = 0.1
    feature_noise_std: float = 0.3
    clutter_feature_std: float = 1.0
    true_score: tuple = (8.0, 2.0)
    clutter_score: tuple = (2.0, 4.0)
    clutter_box_range: tuple = (0.5, 6.0)
    #: share of clutter placed around live objects instead of uniformly in the ROI
    near_clutter_fraction: float = 0.0
    near_clutter_std: tuple = (3.0, 1.0)  # position, velocity offsets

    def __post_init__(self):
        if not 0.0 <= self.near_clutter_fraction <= 1.0:
            raise InputError("near_clutter_fraction must lie in [0, 1]")


@dataclass(eq=False)
class Trajectory:
    object_id: int
    birth: int
    states: np.ndarray  # (death - birth, 6)
    box: np.ndarray
    label: str
    appearance: np.ndarray  # (SHAPE_DIM + HEAT_DIM,)

    @property
    def death(self) -> int:
        return self.birth + self.states.shape[0]

    def alive(self, step: int) -> bool:
        return self.birth <= step < self.death

    def state_at(self, step: int) -> np.ndarray:
        return self.states[step - self.birth]


@dataclass(eq=False)
class Scenario:
    duration: int
    dt: float
    trajectories: list
    ego: np.ndarray  # (duration, 2)

    def alive(self, step: int) -> list:
        return [t for t in self.trajectories if t.alive(step)]

    def truth_at(self, step: int) -> tuple[np.ndarray, np.ndarray]:
        """(ids, states (n, 6)) of objects alive at ``step``."""
        alive = self.alive(step)
        ids = np.array([t.object_id for t in alive], dtype=int)
        states = np.array([t.state_at(step) for t in alive]).reshape(len(alive), 6)
        return ids, states


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> Scenario:
    motion = MotionModel(cfg.dt, cfg.accel_noise_std, max(cfg.survival_prob, 0.0))
    ego = np.outer(np.arange(cfg.duration) * cfg.dt, np.asarray(cfg.ego_velocity, dtype=float))
    trajectories = []
    next_id = 0
    for step in range(cfg.duration):
        count = cfg.initial_objects if step == 0 else rng.poisson(cfg.birth_rate)
        for _ in range(count):
            cls = int(rng.integers(len(CLASSES)))
            pos = ego[step] + rng.uniform(-cfg.spawn_half_width, cfg.spawn_half_width, 2)
            heading = rng.uniform(0.0, 2.0 * np.pi)
            speed = rng.uniform(*cfg.speed_range)
            x = np.array([pos[0], pos[1], speed * np.cos(heading), speed * np.sin(heading), 0.0, 0.0])
            box = np.asarray(CLASSES[cls][1]) * rng.uniform(0.9, 1.1, 3)
            appearance = PROTOTYPES[cls] + cfg.appearance_spread * rng.standard_normal(PROTOTYPES.shape[1])
            states = [x]
            for k in range(step + 1, cfg.duration):
                if rng.random() >= cfg.survival_prob:
                    break
                x = motion.propagate(x[None, :], rng)[0]
                if np.any(np.abs(x[0:2] - ego[k]) > cfg.roi_half_width):
                    break
                states.append(x)
            trajectories.append(Trajectory(next_id, step, np.array(states), box, CLASSES[cls][0],
                                           appearance))
            next_id += 1
    return Scenario(cfg.duration, cfg.dt, trajectories, ego)


def _score(rng, params) -> float:
    return float(np.clip(rng.beta(*params), 1e-6, 1.0))


def emulate_detector(scenario: Scenario, step: int, cfg: DetectorConfig,
                     rng: np.random.Generator) -> tuple[MeasurementFrame, np.ndarray]:
    """One frame of detections and the origin of each (object id or ``CLUTTER``)."""
    if not 0 <= step < scenario.duration:
        raise InputError(f"step {step} outside 0..{scenario.duration - 1}")
    model = cfg.measurement
    chol = model._chol
    ego = scenario.ego[step]
    meas, origin = [], []
    for traj in scenario.alive(step):
        if rng.random() >= model.detection_prob:
            continue
        z = H @ traj.state_at(step) + cfg.kinematic_noise_scale * (chol @ rng.standard_normal(4))
        box = traj.box + cfg.box_noise_std * rng.standard_normal(3)
        feat = traj.appearance + cfg.feature_noise_std * rng.standard_normal(traj.appearance.size)
        meas.append(Measurement(z, np.abs(box), _score(rng, cfg.true_score),
                                feat[:SHAPE_DIM], feat[SHAPE_DIM:]))
        origin.append(traj.object_id)
    alive = scenario.alive(step)
    for _ in range(rng.poisson(model.clutter_mean)):
        if alive and rng.random() < cfg.near_clutter_fraction:
            host = alive[int(rng.integers(len(alive)))].state_at(step)
            pos = host[0:2] + cfg.near_clutter_std[0] * rng.standard_normal(2)
            vel = host[2:4] + cfg.near_clutter_std[1] * rng.standard_normal(2)
        else:
            pos = ego + rng.uniform(-model.roi_half_width, model.roi_half_width, 2)
            vel = rng.uniform(-model.max_speed, model.max_speed, 2)
        box = rng.uniform(*cfg.clutter_box_range, 3)
        feat = cfg.clutter_feature_std * rng.standard_normal(SHAPE_DIM + HEAT_DIM)
        meas.append(Measurement(np.concatenate([pos, vel]), box, _score(rng, cfg.clutter_score),
                                feat[:SHAPE_DIM], feat[SHAPE_DIM:]))
        origin.append(CLUTTER)
    order = rng.permutation(len(meas))
    frame = MeasurementFrame(step, [meas[i] for i in order], ego)
    return frame, np.asarray(origin, dtype=int)[order]


@dataclass(eq=False)
class SimulationRun:
    scenario: Scenario
    frames: list
    origins: list  # per step, origin label of each measurement


def simulate(scenario_cfg: ScenarioConfig, detector_cfg: DetectorConfig, seed: int) -> SimulationRun:
    scenario = generate_scenario(scenario_cfg, substream(seed, "scenario"))
    rng = substream(seed, "detector")
    frames, origins = [], []
    for k in range(scenario.duration):
        f, o = emulate_detector(scenario, k, detector_cfg, rng)
        frames.append(f)
        origins.append(o)
    return SimulationRun(scenario, frames, origins)


def label_measurements(z: np.ndarray, truth: np.ndarray, truth_ids: np.ndarray,
                       model: MeasurementModel) -> np.ndarray:
    """Origin labels for detections that come without them.

    A measurement takes an object's id if it lies inside that object's
    measurement-noise gate and is the nearest such measurement to it.
    """
    labels = np.full(z.shape[0], CLUTTER, dtype=int)
    if z.shape[0] == 0 or truth.shape[0] == 0:
        return labels
    Rinv = np.linalg.inv(model.noise_cov)
    d = z[:, None, :] - (truth @ H.T)[None, :, :]
    maha = np.einsum("jok,kl,jol->jo", d, Rinv, d)
    for o in np.argsort(maha.min(axis=0)):
        j = int(np.argmin(maha[:, o]))
        if maha[j, o] <= model.gate_threshold and labels[j] == CLUTTER:
            labels[j] = truth_ids[o]
    return labels
