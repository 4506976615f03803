import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nebp.types import (
    InputError, KinematicState, Measurement, MeasurementFrame, POKind, PotentialObject,
    association_events, check_consistency, promote_new_to_legacy,
)


def make_po(kind=POKind.NEW, existence=0.4, track_id=1, n=5):
    return PotentialObject(np.zeros((n, 6)), np.full(n, 1.0 / n), existence, kind, track_id)


def test_promote_counts_and_kinds():
    pos = [make_po(POKind.LEGACY, track_id=i) for i in range(2)] + \
          [make_po(POKind.NEW, track_id=i) for i in range(2, 5)]
    out = promote_new_to_legacy(pos)
    assert len(out) == 5
    assert all(p.kind is POKind.LEGACY for p in out)
    assert [p.track_id for p in out] == list(range(5))


def test_promote_empty_and_existence_preserved():
    assert promote_new_to_legacy([]) == []
    (po,) = promote_new_to_legacy([make_po(existence=0.4)])
    assert po.kind is POKind.LEGACY and po.existence == 0.4


def test_promote_idempotent_and_numeric_fields_kept():
    po = make_po()
    once = promote_new_to_legacy([po])
    twice = promote_new_to_legacy(once)
    assert twice[0].kind is POKind.LEGACY
    assert np.array_equal(twice[0].particles, po.particles)
    assert np.array_equal(twice[0].weights, po.weights)


@pytest.mark.parametrize("a,b,expected", [([1], [1], True), ([1], [0], False), ([0, 0], [0], True)])
def test_check_consistency_examples(a, b, expected):
    assert check_consistency(a, b) is expected


def test_check_consistency_range_error():
    with pytest.raises(InputError):
        check_consistency([2], [1])
    with pytest.raises(InputError):
        check_consistency([0], [3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4))
def test_events_form_a_bijection(num_obj, num_meas):
    events = list(association_events(num_obj, num_meas))
    a_vectors = [e[0] for e in events]
    b_vectors = [e[1] for e in events]
    assert len(set(a_vectors)) == len(events) == len(set(b_vectors))
    for a, b in events:
        assert check_consistency(a, b)
    # every consistent (a, b) appears, so each valid a has exactly one b
    import itertools
    valid = [(a, b) for a in itertools.product(range(num_meas + 1), repeat=num_obj)
             for b in itertools.product(range(num_obj + 1), repeat=num_meas) if check_consistency(a, b)]
    assert sorted(valid) == sorted(events)


def test_event_count_small():
    assert len(list(association_events(1, 1))) == 2
    assert len(list(association_events(2, 2))) == 7


def test_po_weight_and_existence_validation():
    with pytest.raises(InputError):
        PotentialObject(np.zeros((2, 6)), np.array([0.5, 0.6]), 0.5, POKind.NEW, 1)
    with pytest.raises(InputError):
        PotentialObject(np.zeros((2, 6)), np.array([0.5, 0.5]), 1.5, POKind.NEW, 1)
    with pytest.raises(InputError):
        PotentialObject(np.zeros((2, 6)), np.array([0.5, 0.5]), 0.5, POKind.NEW, 1, shape=np.zeros(3))


def test_measurement_validation():
    with pytest.raises(InputError):
        Measurement(np.zeros(4), np.ones(3), score=0.0)
    with pytest.raises(InputError):
        Measurement(np.array([0, 0, np.nan, 0]), np.ones(3))
    with pytest.raises(InputError):
        Measurement(np.zeros(3), np.ones(3))
    m = Measurement(np.zeros(4), np.ones(3), 1.0, np.zeros(64), np.zeros(32))
    assert MeasurementFrame(0, [m, m]).kinematics().shape == (2, 4)
    assert MeasurementFrame(0, []).kinematics().shape == (0, 4)


def test_kinematic_state_round_trip():
    x = np.arange(6.0)
    assert np.array_equal(KinematicState.from_vector(x).to_vector(), x)
    with pytest.raises(InputError):
        KinematicState.from_vector([np.inf, 0, 0, 0, 0, 0])


def test_po_mean_is_weighted_and_point_mass():
    p = np.arange(12.0).reshape(2, 6)
    po = PotentialObject(p, np.array([0.0, 1.0]), 0.9, POKind.LEGACY, 1)
    assert np.array_equal(po.mean(), p[1])
