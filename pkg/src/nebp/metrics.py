"""GOSPA and a simplified AMOTA/AMOTP evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .types import InputError


class UndefinedMetricError(ValueError):
    pass


@dataclass
class GospaResult:
    total: float
    localization: float
    missed: float
    false: float


def gospa(estimates, truth, c: float = 5.0, p: float = 1.0, alpha: float = 2.0) -> GospaResult:
    """GOSPA between two point sets (rows are positions).

    Components are reported before the final ``1/p`` root, so for ``p=1``
    they add up to ``total``.
    """
    if c <= 0 or p < 1:
        raise InputError("need c > 0 and p >= 1")
    X = np.asarray(estimates, dtype=float).reshape(-1, 2) if np.size(estimates) else np.zeros((0, 2))
    Y = np.asarray(truth, dtype=float).reshape(-1, 2) if np.size(truth) else np.zeros((0, 2))
    penalty = c**p / alpha
    loc = 0.0
    assigned = 0
    if X.shape[0] and Y.shape[0]:
        d = cdist(X, Y)
        cost = np.minimum(d, c) ** p
        rows, cols = linear_sum_assignment(cost)
        ok = d[rows, cols] < c
        loc = float(np.sum(d[rows, cols][ok] ** p))
        assigned = int(ok.sum())
    missed = penalty * (Y.shape[0] - assigned)
    false = penalty * (X.shape[0] - assigned)
    return GospaResult((loc + missed + false) ** (1.0 / p), loc, missed, false)


@dataclass
class MetricReport:
    gospa_per_step: list = field(default_factory=list)
    gospa_mean: float = 0.0
    localization_mean: float = 0.0
    missed_mean: float = 0.0
    false_mean: float = 0.0
    amota: float = 0.0
    amotp: float = 0.0
    id_switches: int = 0
    cardinality_error: list = field(default_factory=list)


@dataclass
class TrackOutput:
    """Declared tracks of one step: ids (n,), positions (n, 2), scores (n,)."""

    ids: np.ndarray
    positions: np.ndarray
    scores: np.ndarray

    @classmethod
    def from_estimates(cls, estimates) -> "TrackOutput":
        return cls(np.array([e.track_id for e in estimates], dtype=int),
                   np.array([e.state.position for e in estimates]).reshape(-1, 2),
                   np.array([e.score for e in estimates], dtype=float))


@dataclass
class TruthStep:
    ids: np.ndarray
    positions: np.ndarray


@dataclass
class ClearCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    id_switches: int = 0
    distance: float = 0.0
    tp_scores: list = field(default_factory=list)


def clear_mot(tracks: Sequence[TrackOutput], truth: Sequence[TruthStep], threshold: float,
              gate: float = 2.0) -> ClearCounts:
    """CLEAR-MOT matching over a sequence keeping only tracks with score >= threshold."""
    out = ClearCounts()
    last = {}  # truth id -> track id it was last matched to
    for trk, gt in zip(tracks, truth):
        keep = trk.scores >= threshold
        t_ids, t_pos, t_sc = trk.ids[keep], trk.positions[keep], trk.scores[keep]
        matches = {}
        if t_ids.size and gt.ids.size:
            d = cdist(gt.positions, t_pos)
            col_of = {tid: c for c, tid in enumerate(t_ids)}
            used_r, used_c = set(), set()
            for r, gid in enumerate(gt.ids):
                c = col_of.get(last.get(gid))
                if c is not None and d[r, c] <= gate and c not in used_c:
                    matches[r] = c
                    used_r.add(r)
                    used_c.add(c)
            free_r = [r for r in range(len(gt.ids)) if r not in used_r]
            free_c = [c for c in range(len(t_ids)) if c not in used_c]
            if free_r and free_c:
                sub = d[np.ix_(free_r, free_c)]
                cost = np.where(sub <= gate, sub, 1e6)
                rr, cc = linear_sum_assignment(cost)
                for a, b in zip(rr, cc):
                    if sub[a, b] <= gate:
                        matches[free_r[a]] = free_c[b]
        for r, c in matches.items():
            gid, tid = gt.ids[r], t_ids[c]
            if gid in last and last[gid] != tid:
                out.id_switches += 1
            last[gid] = tid
            out.distance += float(np.linalg.norm(gt.positions[r] - t_pos[c]))
            out.tp_scores.append(float(t_sc[c]))
        out.tp += len(matches)
        out.fp += len(t_ids) - len(matches)
        out.fn += len(gt.ids) - len(matches)
    return out


def amota_simplified(tracks: Sequence[TrackOutput], truth: Sequence[TruthStep],
                     recall_samples: int = 40, min_recall: float = 0.1,
                     gate: float = 2.0) -> tuple[float, float]:
    """Average MOTAR and MOTP over a sweep of recall levels.

    The score threshold for recall level ``r`` is the ``ceil(r P)``-th highest
    score among true positives matched with no threshold. Unreached levels
    score MOTAR 0 and MOTP ``gate``.
    """
    num_pos = sum(len(g.ids) for g in truth)
    if num_pos == 0:
        raise UndefinedMetricError("AMOTA is undefined without ground-truth objects")
    base = clear_mot(tracks, truth, -np.inf, gate)
    tp_scores = np.sort(np.asarray(base.tp_scores))[::-1]
    motar, motp = [], []
    cache = {}
    for r in np.linspace(min_recall, 1.0, recall_samples):
        k = math.ceil(r * num_pos - 1e-9)
        if k > tp_scores.size or k == 0:
            motar.append(0.0)
            motp.append(gate)
            continue
        thr = float(tp_scores[k - 1])
        if thr not in cache:
            cache[thr] = clear_mot(tracks, truth, thr, gate)
        cnt = cache[thr]
        val = 1.0 - (cnt.id_switches + cnt.fp + cnt.fn - (1.0 - r) * num_pos) / (r * num_pos)
        motar.append(float(np.clip(val, 0.0, 1.0)))
        motp.append(cnt.distance / cnt.tp if cnt.tp else gate)
    return float(np.mean(motar)), float(np.mean(motp))


def evaluate(tracks: Sequence[TrackOutput], truth: Sequence[TruthStep], c: float = 5.0,
             p: float = 1.0, recall_samples: int = 40, gate: float = 2.0) -> MetricReport:
    per_step = [gospa(t.positions, g.positions, c, p) for t, g in zip(tracks, truth)]
    rep = MetricReport(
        gospa_per_step=[g.total for g in per_step],
        gospa_mean=float(np.mean([g.total for g in per_step])) if per_step else 0.0,
        localization_mean=float(np.mean([g.localization for g in per_step])) if per_step else 0.0,
        missed_mean=float(np.mean([g.missed for g in per_step])) if per_step else 0.0,
        false_mean=float(np.mean([g.false for g in per_step])) if per_step else 0.0,
        cardinality_error=[len(t.ids) - len(g.ids) for t, g in zip(tracks, truth)],
    )
    rep.id_switches = clear_mot(tracks, truth, -np.inf, gate).id_switches
    if sum(len(g.ids) for g in truth):
        rep.amota, rep.amotp = amota_simplified(tracks, truth, recall_samples, gate=gate)
    return rep


def truth_steps(scenario) -> list[TruthStep]:
    steps = []
    for k in range(scenario.duration):
        ids, states = scenario.truth_at(k)
        steps.append(TruthStep(ids, states[:, 0:2]))
    return steps
