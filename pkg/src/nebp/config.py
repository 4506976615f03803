"""Run configuration: one flat, validated record loadable from JSON."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from .models import MeasurementModel, MotionModel
from .neural.training import TrainConfig
from .simulator import DetectorConfig, ScenarioConfig
from .tracker import TrackerConfig, TrackManagerConfig
from .types import InputError


class ConfigError(InputError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # models
    dt: float = 0.5
    survival_prob: float = 0.99
    detection_prob: float = 0.9
    clutter_mean: float = 5.0
    birth_mean: float = 0.05
    meas_noise_std: tuple = (0.5, 0.5, 0.5, 0.5)
    accel_noise_std: float = 0.1
    roi_half_width: float = 54.0
    max_speed: float = 15.0
    gate_prob: float = 0.999
    # tracker
    particles: int = 10_000
    iters: int = 20
    tol: float = 1e-6
    declare_threshold: float = 0.5
    prune_threshold: float = 1e-3
    neural: bool = False
    weights: Optional[str] = None
    # synthetic data
    duration: int = 100
    initial_objects: int = 5
    object_birth_rate: float = 0.0
    object_survival_prob: float = 1.0
    object_accel_std: float = 0.003
    near_clutter_fraction: float = 0.0
    # training and comparison
    train_scenarios: int = 50
    eval_scenarios: int = 5
    train_particles: int = 1000
    epochs: int = 10
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_frames: int = 16
    far_weight_u: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "meas_noise_std", tuple(float(s) for s in np.ravel(self.meas_noise_std)))
        if len(self.meas_noise_std) != 4 or min(self.meas_noise_std) <= 0:
            raise ConfigError("meas_noise_std needs four positive entries")
        for name in ("particles", "iters", "duration", "train_scenarios", "eval_scenarios",
                     "train_particles"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("clutter_mean", "birth_mean", "accel_noise_std", "object_accel_std",
                     "object_birth_rate"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("survival_prob", "object_survival_prob", "near_clutter_fraction", "far_weight_u"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.neural and not self.weights:
            raise ConfigError("neural tracking needs a weights file")
        try:
            self.tracker_config()
            self.train_config()
            self.scenario_config()
        except InputError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["meas_noise_std"] = list(self.meas_noise_std)
        return d

    def override(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def measurement_model(self) -> MeasurementModel:
        return MeasurementModel(detection_prob=self.detection_prob,
                                noise_cov=np.diag(np.square(self.meas_noise_std)),
                                clutter_mean=self.clutter_mean, birth_mean=self.birth_mean,
                                roi_half_width=self.roi_half_width, max_speed=self.max_speed,
                                gate_prob=self.gate_prob)

    def tracker_config(self, particles: int | None = None) -> TrackerConfig:
        return TrackerConfig(
            motion=MotionModel(self.dt, self.accel_noise_std, self.survival_prob),
            measurement=self.measurement_model(),
            manager=TrackManagerConfig(self.declare_threshold, self.prune_threshold),
            num_particles=particles or self.particles, max_iter=self.iters, tol=self.tol)

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(duration=self.duration, dt=self.dt, initial_objects=self.initial_objects,
                              birth_rate=self.object_birth_rate,
                              survival_prob=self.object_survival_prob,
                              accel_noise_std=self.object_accel_std,
                              roi_half_width=self.roi_half_width)

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(measurement=self.measurement_model(),
                              near_clutter_fraction=self.near_clutter_fraction)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, learning_rate=self.learning_rate,
                           momentum=self.momentum, batch_frames=self.batch_frames,
                           u=self.far_weight_u, seed=self.seed)
