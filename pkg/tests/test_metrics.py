import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nebp.metrics import (
    TrackOutput, TruthStep, UndefinedMetricError, amota_simplified, clear_mot, evaluate, gospa,
)


def test_gospa_examples():
    X = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert gospa(X, X).total == 0.0
    r = gospa(np.zeros((0, 2)), np.array([[1.0, 1.0]]), c=2, p=1)
    assert r.total == pytest.approx(1.0) and r.missed == pytest.approx(1.0)
    r = gospa(X + [0.3, 0.4], X, c=5, p=1)
    assert r.localization == pytest.approx(2 * 0.5)


def test_gospa_cutoff_turns_far_pair_into_miss_and_false():
    r = gospa(np.array([[10.0, 0]]), np.array([[0.0, 0]]), c=5, p=1)
    assert r.total == pytest.approx(5.0) and r.localization == 0.0


def _points(draw_list):
    return np.array(draw_list, dtype=float).reshape(-1, 2)


@settings(max_examples=60, deadline=None)
@given(*[st.lists(st.floats(-10, 10), min_size=0, max_size=6).filter(lambda v: len(v) % 2 == 0)
         for _ in range(3)])
def test_gospa_triangle_inequality(a, b, c):
    A, B, C = _points(a), _points(b), _points(c)
    ab, bc, ac = gospa(A, B).total, gospa(B, C).total, gospa(A, C).total
    assert ac <= ab + bc + 1e-9


def _seq(ids, pos, scores):
    return TrackOutput(np.array(ids, int), np.array(pos, float).reshape(-1, 2), np.array(scores, float))


def _truth(ids, pos):
    return TruthStep(np.array(ids, int), np.array(pos, float).reshape(-1, 2))


def test_amota_perfect_and_empty():
    truth = [_truth([1, 2], [[0, 0], [10, 0]]) for _ in range(5)]
    perfect = [_seq([5, 6], [[0, 0], [10, 0]], [0.9, 0.8]) for _ in range(5)]
    assert amota_simplified(perfect, truth)[0] == pytest.approx(1.0)
    empty = [_seq([], [], []) for _ in range(5)]
    assert amota_simplified(empty, truth)[0] == 0.0
    with pytest.raises(UndefinedMetricError):
        amota_simplified(empty, [_truth([], []) for _ in range(5)])


def test_amota_hand_table():
    # three objects, one step, scores 0.9 / 0.6 / 0.3 plus a false track with score 0.5
    truth = [_truth([1, 2, 3], [[0, 0], [10, 0], [20, 0]])]
    tracks = [_seq([11, 12, 13, 14], [[0, 0], [10, 0.5], [20, 1.0], [40, 0]], [0.9, 0.6, 0.3, 0.5])]
    # recall levels 0.1..1 over 3 positives: k = ceil(3r) gives thresholds
    # k=1 -> 0.9: TP1 FP0 FN2 ; k=2 -> 0.6: TP2 FP0 FN1 ; k=3 -> 0.3: TP3 FP1 FN0
    # last column: summed matched distance
    table = {1: (0, 2, 0.0), 2: (0, 1, 0.5), 3: (1, 0, 1.5)}
    motar, motp = [], []
    for r in np.linspace(0.1, 1.0, 40):
        k = int(np.ceil(3 * r - 1e-9))
        fp, fn, dist = table[k]
        motar.append(float(np.clip(1 - (fp + fn - (1 - r) * 3) / (r * 3), 0, 1)))
        motp.append(dist / k)
    am, ap = amota_simplified(tracks, truth)
    assert am == pytest.approx(np.mean(motar), abs=1e-12)
    assert ap == pytest.approx(np.mean(motp), abs=1e-12)


def test_amota_low_score_clutter_never_helps():
    rng = np.random.default_rng(0)
    truth = [_truth([1, 2, 3], rng.uniform(0, 30, (3, 2))) for _ in range(6)]
    tracks = [_seq([1, 2, 3], g.positions + rng.normal(0, 0.3, (3, 2)), rng.uniform(0.3, 1, 3))
              for g in truth]
    base = amota_simplified(tracks, truth)[0]
    noisy = [_seq(list(t.ids) + [99], np.vstack([t.positions, [[500, 500]]]), list(t.scores) + [0.01])
             for t in tracks]
    assert amota_simplified(noisy, truth)[0] <= base + 1e-12


def test_id_switch_counted():
    truth = [_truth([1], [[0, 0]])] * 3
    tracks = [_seq([5], [[0, 0]], [1]), _seq([6], [[0, 0]], [1]), _seq([6], [[0, 0]], [1])]
    assert clear_mot(tracks, truth, -np.inf).id_switches == 1


def test_evaluate_report():
    truth = [_truth([1], [[0, 0]]) for _ in range(4)]
    tracks = [_seq([1], [[0.5, 0]], [0.9]) for _ in range(4)]
    rep = evaluate(tracks, truth)
    assert rep.gospa_mean == pytest.approx(0.5)
    assert rep.cardinality_error == [0, 0, 0, 0]
    assert 0 <= rep.amota <= 1
