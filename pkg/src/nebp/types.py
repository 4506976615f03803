"""Shared domain types for the tracker.

States are 6-vectors ``[px, py, vx, vy, ax, ay]``; measurements are
4-vectors ``[px, py, vx, vy]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

STATE_DIM = 6
MEAS_DIM = 4
BOX_DIM = 3
SHAPE_DIM = 64
HEAT_DIM = 32


class InputError(ValueError):
    """Raised for arguments outside their declared range."""


class DegenerateInputError(ValueError):
    """Raised when an inference problem carries no probability mass."""


class POKind(str, Enum):
    LEGACY = "legacy"
    NEW = "new"


@dataclass(frozen=True, eq=False)
class KinematicState:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(2)
            if not np.all(np.isfinite(v)):
                raise InputError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_vector(cls, x) -> "KinematicState":
        x = np.asarray(x, dtype=float).reshape(STATE_DIM)
        return cls(x[0:2], x[2:4], x[4:6])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity, self.acceleration])


def _as_vec(x, dim: int, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (dim,):
        raise InputError(f"{name} must have length {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} must be finite")
    return v


@dataclass(frozen=True, eq=False)
class Measurement:
    kinematic: np.ndarray
    box: np.ndarray
    score: float = 1.0
    shape: Optional[np.ndarray] = None
    heat: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "kinematic", _as_vec(self.kinematic, MEAS_DIM, "kinematic"))
        object.__setattr__(self, "box", _as_vec(self.box, BOX_DIM, "box"))
        if not 0.0 < self.score <= 1.0:
            raise InputError(f"score must lie in (0, 1], got {self.score}")
        if self.shape is not None:
            object.__setattr__(self, "shape", _as_vec(self.shape, SHAPE_DIM, "shape"))
        if self.heat is not None:
            object.__setattr__(self, "heat", _as_vec(self.heat, HEAT_DIM, "heat"))


@dataclass(frozen=True, eq=False)
class MeasurementFrame:
    step: int
    measurements: tuple = ()
    ego: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))
        object.__setattr__(self, "ego", np.asarray(self.ego, dtype=float).reshape(2))

    def __len__(self):
        return len(self.measurements)

    def kinematics(self) -> np.ndarray:
        if not self.measurements:
            return np.zeros((0, MEAS_DIM))
        return np.stack([m.kinematic for m in self.measurements])


@dataclass(frozen=True, eq=False)
class PotentialObject:
    """A hypothesized object: weighted particle set plus existence probability."""

    particles: np.ndarray
    weights: np.ndarray
    existence: float
    kind: POKind
    track_id: int
    box: np.ndarray = field(default_factory=lambda: np.zeros(BOX_DIM))
    shape: Optional[np.ndarray] = None
    heat: Optional[np.ndarray] = None
    detection_score: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.particles, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 2 or p.shape[1] != STATE_DIM:
            raise InputError(f"particles must be (N, {STATE_DIM}), got {p.shape}")
        if w.shape != (p.shape[0],):
            raise InputError("one weight per particle required")
        if abs(w.sum() - 1.0) > 1e-9:
            raise InputError(f"particle weights must sum to 1, got {w.sum()!r}")
        if not 0.0 <= self.existence <= 1.0:
            raise InputError(f"existence must lie in [0, 1], got {self.existence}")
        object.__setattr__(self, "particles", p)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kind", POKind(self.kind))
        object.__setattr__(self, "box", _as_vec(self.box, BOX_DIM, "box"))
        if self.shape is not None:
            object.__setattr__(self, "shape", _as_vec(self.shape, SHAPE_DIM, "shape"))
        if self.heat is not None:
            object.__setattr__(self, "heat", _as_vec(self.heat, HEAT_DIM, "heat"))

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    def mean(self) -> np.ndarray:
        """MMSE estimate (weighted particle mean)."""
        return self.weights @ self.particles

    def covariance(self) -> np.ndarray:
        d = self.particles - self.mean()
        return (d * self.weights[:, None]).T @ d

    def evolve(self, **changes) -> "PotentialObject":
        return replace(self, **changes)


def promote_new_to_legacy(pos: Sequence[PotentialObject]) -> list[PotentialObject]:
    """Turn the surviving POs of one step into the legacy POs of the next."""
    return [po if po.kind is POKind.LEGACY else po.evolve(kind=POKind.LEGACY) for po in pos]


def check_consistency(a: Sequence[int], b: Sequence[int]) -> bool:
    """Return True iff object-oriented ``a`` and measurement-oriented ``b`` agree.

    ``a[i] = j > 0`` means legacy PO ``i+1`` generated measurement ``j``;
    ``b[j] = i > 0`` means measurement ``j+1`` was generated by PO ``i``.
    """
    a = [int(v) for v in a]
    b = [int(v) for v in b]
    num_obj, num_meas = len(a), len(b)
    for i, ai in enumerate(a):
        if not 0 <= ai <= num_meas:
            raise InputError(f"a[{i}]={ai} outside 0..{num_meas}")
    for j, bj in enumerate(b):
        if not 0 <= bj <= num_obj:
            raise InputError(f"b[{j}]={bj} outside 0..{num_obj}")
    for i, ai in enumerate(a, start=1):
        for j, bj in enumerate(b, start=1):
            if (ai == j) != (bj == i):
                return False
    return True


def association_events(num_obj: int, num_meas: int):
    """Yield every valid ``(a, b)`` pair, i.e. every injective partial map."""

    def rec(i, used, a):
        if i == num_obj:
            b = [0] * num_meas
            for obj, j in enumerate(a, start=1):
                if j:
                    b[j - 1] = obj
            yield tuple(a), tuple(b)
            return
        for j in range(num_meas + 1):
            if j == 0 or j not in used:
                yield from rec(i + 1, used | {j} if j else used, a + [j])

    yield from rec(0, frozenset(), [])
