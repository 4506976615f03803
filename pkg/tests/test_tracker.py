import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nebp.association import AssociationProblem, iterate_association
from nebp.models import MeasurementModel, MotionModel
from nebp.rng import substream
from nebp.tracker import (
    Belief, Gating, NewPOCandidate, Tracker, TrackerConfig, TrackManagerConfig, birth_candidate,
    compute_beta, compute_xi, declare_estimate_prune, gate_and_evaluate, predict, update_beliefs,
)
from nebp.types import DegenerateInputError, InputError, Measurement, MeasurementFrame, POKind, PotentialObject


def po_at(state, existence=1.0, n=200, spread=0.05, seed=0, track_id=1, kind=POKind.LEGACY):
    rng = np.random.default_rng(seed)
    particles = np.asarray(state, float) + spread * rng.standard_normal((n, 6))
    return PotentialObject(particles, np.full(n, 1.0 / n), existence, kind, track_id)


def test_predict_existence_and_weights():
    m = MotionModel(survival_prob=0.99)
    pos = [po_at(np.zeros(6), 1.0, n=10_000), po_at(np.zeros(6), 0.0)]
    out = predict(pos, m, np.random.default_rng(0))
    assert out[0].existence == pytest.approx(0.99) and out[1].existence == 0.0
    assert out[0].num_particles == 10_000
    assert np.array_equal(out[0].weights, pos[0].weights)


def test_beta_without_missed_detection_mass():
    model = MeasurementModel(detection_prob=1.0)
    po = po_at(np.zeros(6))
    z = np.zeros((1, 4))
    row = compute_beta(po, z, model)
    ratios = model.detection_prob * model.density(z[0], po.particles) / model.clutter_intensity()
    assert row[0] == 0.0
    assert row[1] == pytest.approx(po.weights @ ratios, rel=1e-12)


def test_beta_nonexistent_and_symmetric():
    model = MeasurementModel()
    z = np.zeros((2, 4))
    assert np.array_equal(compute_beta(po_at(np.zeros(6), 0.0), z, model), [1.0, 0.0, 0.0])
    row = compute_beta(po_at(np.zeros(6), 0.7), z, model)
    assert row[1] == row[2] > 0


def test_beta_is_zero_outside_gate():
    row = compute_beta(po_at(np.zeros(6)), np.array([[30.0, 0, 0, 0]]), MeasurementModel())
    assert row[1] == 0.0


def test_xi_rows():
    assert np.array_equal(compute_xi(0.0, 3), np.ones(4))
    row = compute_xi(0.04, 3)
    assert row[0] == pytest.approx(1.04) and np.all(row[1:] == 1.0)
    assert compute_xi(0.04, 5)[0] == row[0]


def test_birth_mass_matches_point_mass_integral():
    model = MeasurementModel(clutter_mean=5.0, birth_mean=0.2)
    meas = Measurement(np.zeros(4), np.ones(3))
    cand = birth_candidate(meas, model, 1000, 0.5, 1, (0.0, 0.0), np.random.default_rng(0))
    # a measurement deep inside the support: every proposal particle is in support
    assert cand.birth_mass == pytest.approx(0.2 / 5.0)
    assert cand.po.weights.sum() == pytest.approx(1.0, abs=1e-12)


def _empty_result(num_obj, num_meas, beta, xi):
    return iterate_association(AssociationProblem(beta, xi))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_missed_detection_existence_closed_form(e, pd):
    model = MeasurementModel(detection_prob=pd)
    po = po_at(np.zeros(6), e)
    beta = compute_beta(po, np.zeros((0, 4)), model)[None, :]
    if e * pd == 1.0:
        # a certain, always-detected object with no measurement is impossible
        with pytest.raises(DegenerateInputError):
            iterate_association(AssociationProblem(beta, np.zeros((0, 2))))
        return
    result = iterate_association(AssociationProblem(beta, np.zeros((0, 2))))
    gating = Gating(np.zeros(0, int), np.zeros((0, po.num_particles)))
    (b,) = update_beliefs([po], [gating], [], result, model, np.ones((1, 0)), np.ones(0), None)
    assert b.po.existence == pytest.approx(e * (1 - pd) / (1 - e * pd), abs=1e-12)
    assert b.po.existence <= e + 1e-15


def test_new_po_existence_from_birth_mass():
    model = MeasurementModel()
    cand = NewPOCandidate(po_at(np.zeros(6), 0.0, kind=POKind.NEW), 0.04)
    result = iterate_association(AssociationProblem(np.zeros((0, 2)), np.array([[1.04]])))
    (b,) = update_beliefs([], [], [cand], result, model, np.ones((0, 1)), np.ones(1), None)
    assert b.po.existence == pytest.approx(0.04 / 1.04, rel=1e-12)


def test_forced_association():
    model = MeasurementModel(detection_prob=1.0)
    po = po_at(np.zeros(6), 1.0)
    z = np.zeros((1, 4))
    g = gate_and_evaluate(po, z, model)
    beta = compute_beta(po, z, model, g)[None, :]
    result = iterate_association(AssociationProblem(beta, np.array([[1.0, 1.0]])))
    (b, _) = update_beliefs([po], [g], [NewPOCandidate(po_at(np.zeros(6), 0, kind=POKind.NEW), 0.0)],
                            result, model, np.ones((1, 1)), np.ones(1), None)
    assert b.association_marginal[1] == pytest.approx(1.0)


def test_declare_and_prune():
    cfg = TrackManagerConfig(0.5, 1e-3)
    beliefs = [Belief(po_at(np.ones(6), 0.9, track_id=1, kind=POKind.NEW), np.ones(1)),
               Belief(po_at(np.ones(6), 1e-4, track_id=2), np.ones(1))]
    est, surv = declare_estimate_prune(beliefs, cfg)
    assert [e.track_id for e in est] == [1]
    assert np.allclose(est[0].state.to_vector(), beliefs[0].po.mean())
    assert est[0].score == pytest.approx(0.9 * beliefs[0].po.detection_score)
    assert [p.track_id for p in surv] == [1] and surv[0].kind is POKind.LEGACY


def test_manager_config_validation():
    with pytest.raises(InputError):
        TrackManagerConfig(0.1, 0.5)


def _frame(step, zs, ego=(0.0, 0.0)):
    return MeasurementFrame(step, [Measurement(z, np.ones(3), 0.9) for z in zs], ego)


def test_tracker_confirms_a_repeated_object_and_ignores_far_measurements():
    mm = MeasurementModel(detection_prob=0.9, clutter_mean=2.0, birth_mean=0.1)
    cfg = TrackerConfig(MotionModel(0.5, 0.1), mm, num_particles=2000)
    tr = Tracker(cfg, substream(0, "particles"))
    for k in range(6):
        out = tr.step(_frame(k, [np.array([0.5 * k, 0, 1.0, 0]), np.array([500.0, 0, 0, 0])]))
    assert out.kept.tolist() == [0]
    assert len(out.estimates) == 1
    assert np.allclose(out.estimates[0].state.position, [2.5, 0], atol=0.5)


def test_tracker_is_deterministic():
    mm = MeasurementModel(clutter_mean=3.0)
    cfg = TrackerConfig(measurement=mm, num_particles=300)
    frames = [_frame(k, [np.array([k * 0.5, 1.0, 1.0, 0.0]), np.array([-5.0, k, 0, 1.0])])
              for k in range(5)]
    runs = []
    for _ in range(2):
        tr = Tracker(cfg, substream(9, "particles"))
        runs.append([[(e.track_id, e.state.to_vector().tobytes(), e.score) for e in tr.step(f).estimates]
                     for f in frames])
    assert runs[0] == runs[1]
