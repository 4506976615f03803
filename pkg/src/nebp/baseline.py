"""Nearest-neighbour reference trackers.

Both share the track logic: a measurement left unassigned starts a tentative
track, two hits confirm it, and a track is dropped after two consecutive
misses (one for tentative tracks).

``GreedyNNTracker`` matches detections to tracks in order of increasing
distance and reports the matched detection itself (closest-point tracking,
no filtering). ``KalmanNNTracker`` uses the same greedy matching on top of
a Kalman filter with the tracker's motion model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import H, MeasurementModel, MotionModel
from .tracker import Estimate
from .types import KinematicState, MeasurementFrame

CONFIRM_HITS = 2
MAX_MISSES = 2


@dataclass
class _Track:
    track_id: int
    x: np.ndarray
    P: np.ndarray
    hits: int = 1
    misses: int = 0
    score: float = 1.0

    @property
    def confirmed(self) -> bool:
        return self.hits >= CONFIRM_HITS


class KalmanNNTracker:
    def __init__(self, motion: MotionModel, measurement: MeasurementModel, accel_std: float = 0.5):
        self.F = motion.transition_matrix()
        self.Q = motion.noise_covariance()
        self.model = measurement
        self.R = measurement.noise_cov
        self.P0 = np.zeros((6, 6))
        self.P0[:4, :4] = self.R
        self.P0[4, 4] = self.P0[5, 5] = accel_std**2
        self.tracks: list[_Track] = []
        self._next = 1

    def step(self, frame: MeasurementFrame) -> list[Estimate]:
        for t in self.tracks:
            t.x = self.F @ t.x
            t.P = self.F @ t.P @ self.F.T + self.Q
        z = frame.kinematics()
        if z.shape[0]:
            z = z[self.model.in_roi(z, frame.ego)]
        scores = [m.score for m in frame.measurements if self.model.in_roi(m.kinematic, frame.ego)[0]]

        pairs = []
        gate = self.model.gate_threshold
        for ti, t in enumerate(self.tracks):
            S = H @ t.P @ H.T + self.R
            Sinv = np.linalg.inv(S)
            for j in range(z.shape[0]):
                d = z[j] - H @ t.x
                m = float(d @ Sinv @ d)
                if m <= gate:
                    pairs.append((m, ti, j))
        pairs.sort()
        used_t, used_z = set(), set()
        for _, ti, j in pairs:
            if ti in used_t or j in used_z:
                continue
            used_t.add(ti)
            used_z.add(j)
            t = self.tracks[ti]
            S = H @ t.P @ H.T + self.R
            K = t.P @ H.T @ np.linalg.inv(S)
            t.x = t.x + K @ (z[j] - H @ t.x)
            t.P = (np.eye(6) - K @ H) @ t.P
            t.hits += 1
            t.misses = 0
            t.score = scores[j]

        survivors = []
        for ti, t in enumerate(self.tracks):
            if ti not in used_t:
                t.misses += 1
                limit = MAX_MISSES if t.confirmed else 1
                if t.misses >= limit:
                    continue
            survivors.append(t)
        for j in range(z.shape[0]):
            if j not in used_z:
                x = np.concatenate([z[j], np.zeros(2)])
                survivors.append(_Track(self._next, x, self.P0.copy(), score=scores[j]))
                self._next += 1
        self.tracks = survivors
        return [Estimate(t.track_id, KinematicState.from_vector(t.x), t.score, 1.0)
                for t in self.tracks if t.confirmed]


@dataclass
class _PointTrack:
    track_id: int
    z: np.ndarray
    hits: int = 1
    misses: int = 0
    score: float = 1.0


class GreedyNNTracker:
    def __init__(self, dt: float, measurement: MeasurementModel):
        self.dt = dt
        self.model = measurement
        self.S_inv = np.linalg.inv(2.0 * measurement.noise_cov)
        self.tracks: list[_PointTrack] = []
        self._next = 1

    def step(self, frame: MeasurementFrame) -> list[Estimate]:
        kept = [m for m in frame.measurements if self.model.in_roi(m.kinematic, frame.ego)[0]]
        z = np.array([m.kinematic for m in kept]).reshape(-1, 4)
        pairs = []
        gate = self.model.gate_threshold
        for ti, t in enumerate(self.tracks):
            pred = t.z.copy()
            pred[0:2] += self.dt * t.z[2:4]
            d = z - pred
            maha = np.einsum("ji,ik,jk->j", d, self.S_inv, d)
            for j in np.flatnonzero(maha <= gate):
                pairs.append((float(maha[j]), ti, int(j)))
        pairs.sort()
        used_t, used_z = set(), set()
        reported = []
        for _, ti, j in pairs:
            if ti in used_t or j in used_z:
                continue
            used_t.add(ti)
            used_z.add(j)
            t = self.tracks[ti]
            t.z, t.hits, t.misses, t.score = z[j], t.hits + 1, 0, kept[j].score
            if t.hits >= CONFIRM_HITS:
                reported.append(t)
        survivors = []
        for ti, t in enumerate(self.tracks):
            if ti not in used_t:
                t.misses += 1
                t.z = t.z.copy()
                t.z[0:2] += self.dt * t.z[2:4]
                if t.misses >= (MAX_MISSES if t.hits >= CONFIRM_HITS else 1):
                    continue
            survivors.append(t)
        for j in range(z.shape[0]):
            if j not in used_z:
                survivors.append(_PointTrack(self._next, z[j], score=kept[j].score))
                self._next += 1
        self.tracks = survivors
        return [Estimate(t.track_id, KinematicState.from_vector(np.concatenate([t.z, np.zeros(2)])),
                         t.score, 1.0) for t in reported]
