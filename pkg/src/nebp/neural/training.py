"""Training data from labeled scenarios and an SGD loop over the network stack."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..rng import substream
from ..simulator import CLUTTER, SimulationRun
from ..tracker import Tracker, TrackerConfig
from ..types import InputError
from .losses import loss_affinity, loss_far_logits
from .mlp import MLP
from .networks import (
    NETWORK_ORDER,
    Features,
    NeuralStack,
    affinity_backward,
    affinity_forward,
    far_input,
    normalized_beta,
    pair_inputs,
)

_NO_OBJECT = -2


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class FrameSample:
    pos: Features
    meas: Features
    bp_ratio: np.ndarray  # (I, J) normalized beta
    gate: np.ndarray  # (I, J) bool, pairs with nonzero beta
    rho_label: np.ndarray  # (I, J) 0/1
    omega_label: np.ndarray  # (J,) 0/1


def _po_labels(legacy, po_origin: dict) -> np.ndarray:
    """Object id per PO; when several POs descend from one object only the most likely keeps it."""
    labels = np.array([po_origin.get(po.track_id, CLUTTER) for po in legacy], dtype=int)
    best = {}
    for i, (lab, po) in enumerate(zip(labels, legacy)):
        if lab == CLUTTER:
            continue
        if lab not in best or po.existence > legacy[best[lab]].existence:
            best[lab] = i
    for i, lab in enumerate(labels):
        if lab != CLUTTER and best[lab] != i:
            labels[i] = _NO_OBJECT
    return labels


def collect_samples(runs: Sequence[SimulationRun], config: TrackerConfig, seed: int) -> list[FrameSample]:
    """Run plain BP on each labeled run and record network inputs and targets per frame.

    A PO inherits the origin of the measurement that created it; a measurement
    is a true detection unless its origin is clutter.
    """
    samples = []
    for k, run in enumerate(runs):
        tracker = Tracker(config, substream(seed, f"collect-{k}"))
        po_origin: dict = {}
        for frame, origins in zip(run.frames, run.origins):
            out = tracker.step(frame)
            meas_origin = origins[out.kept] if out.kept.size else np.zeros(0, dtype=int)
            I, J = len(out.legacy), len(out.measurements)
            for j, b in enumerate(out.beliefs[I:]):
                po_origin[b.po.track_id] = int(meas_origin[j])
            if J == 0:
                continue
            po_lab = _po_labels(out.legacy, po_origin)
            rho = (po_lab[:, None] == meas_origin[None, :]) & (meas_origin[None, :] != CLUTTER)
            samples.append(FrameSample(
                pos=Features.from_pos(out.legacy),
                meas=Features.from_measurements(out.measurements),
                bp_ratio=normalized_beta(out.beta)[:, 1:] if I else np.zeros((0, J)),
                gate=out.beta[:, 1:] > 0 if I else np.zeros((0, J), bool),
                rho_label=rho.astype(int).reshape(I, J),
                omega_label=(meas_origin != CLUTTER).astype(int),
            ))
    return samples


def _logit_view(net: MLP) -> MLP:
    # shares parameter arrays with ``net``; exposes the pre-sigmoid output
    return MLP(net.weights, net.biases, net.slope, "identity")


def frame_loss(stack: NeuralStack, sample: FrameSample, u: float = 0.5,
               with_grad: bool = False) -> tuple[float, list | None]:
    """L_A + L_F of one frame and, optionally, gradients aligned with ``stack.params()``."""
    grads = {}
    cache = [] if with_grad else None
    far_net = _logit_view(stack.far)
    logits = far_net.forward(far_input(sample.meas), cache)[:, 0]
    lf, dlogit = loss_far_logits(logits, sample.omega_label, u)
    if with_grad:
        grads["far"] = far_net.backward(cache, dlogit[:, None])

    la = 0.0
    if sample.gate.any():
        # pairs outside the gate have beta = 0, which no coefficient can change
        inputs = pair_inputs(sample.pos, sample.meas, sample.bp_ratio).subset(sample.gate)
        fwd = affinity_forward(stack, inputs, keep_cache=with_grad)
        la, df = loss_affinity(fwd.f_rho[:, 0], sample.rho_label[sample.gate])
        if with_grad:
            grads.update(affinity_backward(stack, fwd, df))
    if not with_grad:
        return la + lf, None
    flat = []
    for name, net in zip(NETWORK_ORDER, stack.networks()):
        g = grads.get(name)
        flat += g.params() if g is not None else [np.zeros_like(p) for p in net.params()]
    return la + lf, flat


def mean_loss(stack: NeuralStack, samples: Sequence[FrameSample], u: float = 0.5) -> float:
    if not samples:
        raise InputError("no samples")
    return float(np.mean([frame_loss(stack, s, u)[0] for s in samples]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 1e-3
    momentum: float = 0.9
    batch_frames: int = 16
    u: float = 0.5
    clip_norm: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_frames < 1:
            raise InputError("epochs must be >= 0 and batch_frames >= 1")
        if self.learning_rate < 0 or not 0.0 <= self.momentum < 1.0:
            raise InputError("need learning_rate >= 0 and momentum in [0, 1)")
        if not 0.0 <= self.u <= 1.0:
            raise InputError("u must lie in [0, 1]")


@dataclass
class TrainResult:
    stack: NeuralStack
    train_loss: list = field(default_factory=list)
    validation_loss: list = field(default_factory=list)


def train(stack: NeuralStack, samples: Sequence[FrameSample], cfg: TrainConfig = TrainConfig(),
          validation: Sequence[FrameSample] | None = None) -> TrainResult:
    """Minibatch SGD with momentum and global-norm gradient clipping.

    The input stack is left untouched. Loss curves hold one value per epoch,
    starting with the value before any update.
    """
    if not samples:
        raise InputError("no training samples")
    stack = stack.copy()
    params = stack.params()
    velocity = [np.zeros_like(p) for p in params]
    rng = substream(cfg.seed, "training")
    result = TrainResult(stack)

    def record():
        result.train_loss.append(mean_loss(stack, samples, cfg.u))
        if validation:
            result.validation_loss.append(mean_loss(stack, validation, cfg.u))

    record()
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(order), cfg.batch_frames):
            batch = order[start:start + cfg.batch_frames]
            total = [np.zeros_like(p) for p in params]
            for idx in batch:
                loss, g = frame_loss(stack, samples[idx], cfg.u, with_grad=True)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(f"loss {loss} at epoch {epoch}, frame {idx}")
                for t, gi in zip(total, g):
                    t += gi
            norm = np.sqrt(sum(float(np.sum(t * t)) for t in total)) / len(batch)
            if not np.isfinite(norm):
                raise TrainingDivergedError(f"non-finite gradient at epoch {epoch}")
            scale = 1.0 / len(batch)
            if cfg.clip_norm > 0 and norm > cfg.clip_norm:
                scale *= cfg.clip_norm / norm
            for p, v, t in zip(params, velocity, total):
                v *= cfg.momentum
                v -= cfg.learning_rate * scale * t
                p += v
        record()
        if not np.isfinite(result.train_loss[-1]):
            raise TrainingDivergedError(f"training loss became {result.train_loss[-1]} "
                                        f"after epoch {epoch}")
    return result
