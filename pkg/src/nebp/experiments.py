"""Shared experiment plumbing: seeded suites, tracker runs, ablation arms, training."""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import RunConfig
from .io import MetricRow
from .metrics import TrackOutput, evaluate, truth_steps
from .neural import NeuralEnhancer, NeuralStack, collect_samples, mean_loss, train
from .neural.training import TrainResult
from .rng import substream
from .simulator import SimulationRun, simulate
from .tracker import Tracker, TrackerConfig

#: name -> (use_affinity, use_far), None for plain BP
ARMS = {
    "BP": None,
    "affinity-only": (True, False),
    "FAR-only": (False, True),
    "NEBP+": (True, True),
}


def suite_seed(seed: int, purpose: str, index: int) -> int:
    """Disjoint, reproducible scenario seeds per purpose (train / validation / eval)."""
    return zlib.crc32(f"{purpose}:{seed}:{index}".encode())


def make_suite(cfg: RunConfig, purpose: str, count: int) -> list[SimulationRun]:
    scfg, dcfg = cfg.scenario_config(), cfg.detector_config()
    return [simulate(scfg, dcfg, suite_seed(cfg.seed, purpose, k)) for k in range(count)]


def run_tracker(run: SimulationRun, tracker_cfg: TrackerConfig, seed: int, enhancer=None) -> list:
    tracker = Tracker(tracker_cfg, substream(seed, "particles"), enhancer)
    return [tracker.step(f).estimates for f in run.frames]


def enhancer_for(arm: str, stack: NeuralStack | None):
    mode = ARMS[arm]
    if mode is None:
        return None
    return NeuralEnhancer(stack, *mode)


def score_runs(name: str, runs: Sequence[SimulationRun], estimates: Sequence[list]) -> MetricRow:
    """Metrics averaged over runs (ID switches summed)."""
    reports = [evaluate([TrackOutput.from_estimates(e) for e in est], truth_steps(run.scenario))
               for run, est in zip(runs, estimates)]
    mean = lambda attr: float(np.mean([getattr(r, attr) for r in reports]))  # noqa: E731
    return MetricRow(name, mean("gospa_mean"), mean("localization_mean"), mean("missed_mean"),
                     mean("false_mean"), mean("amota"), mean("amotp"),
                     int(sum(r.id_switches for r in reports)))


def compare_arms(runs: Sequence[SimulationRun], tracker_cfg: TrackerConfig, seed: int,
                 stack: NeuralStack | None, arms: Sequence[str] = tuple(ARMS)) -> list[MetricRow]:
    rows = []
    for arm in arms:
        enh = enhancer_for(arm, stack)
        est = [run_tracker(run, tracker_cfg, seed + k, enh) for k, run in enumerate(runs)]
        rows.append(score_runs(arm, runs, est))
    return rows


@dataclass
class TrainingOutcome:
    result: TrainResult
    initial: NeuralStack
    heldout_initial: float
    heldout_trained: float


def train_from_config(cfg: RunConfig, train_runs: Sequence[SimulationRun] | None = None,
                      heldout_runs: Sequence[SimulationRun] | None = None) -> TrainingOutcome:
    """Collect labeled frames with plain BP, train from a seeded initialization, score held-out loss."""
    if train_runs is None:
        train_runs = make_suite(cfg, "train", cfg.train_scenarios)
    if heldout_runs is None:
        heldout_runs = make_suite(cfg, "validation", max(1, cfg.eval_scenarios))
    tcfg = cfg.tracker_config(cfg.train_particles)
    samples = collect_samples(train_runs, tcfg, cfg.seed)
    heldout = collect_samples(heldout_runs, tcfg, cfg.seed + 1)
    initial = NeuralStack.init(substream(cfg.seed, "training"))
    result = train(initial, samples, cfg.train_config(), heldout)
    return TrainingOutcome(result, initial, mean_loss(initial, heldout, cfg.far_weight_u),
                           mean_loss(result.stack, heldout, cfg.far_weight_u))
