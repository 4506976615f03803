import struct

import numpy as np
import pytest

from nebp import io
from nebp.neural import NeuralStack
from nebp.simulator import DetectorConfig, ScenarioConfig, simulate
from nebp.tracker import Estimate
from nebp.types import InputError, KinematicState, Measurement, MeasurementFrame


@pytest.fixture
def run():
    return simulate(ScenarioConfig(duration=6), DetectorConfig(), 11)


def test_frames_round_trip_exact(tmp_path, run):
    path = tmp_path / "f.jsonl"
    io.write_frames(path, run.frames, run.origins)
    frames, origins = io.read_frames(path)
    for a, b, oa, ob in zip(run.frames, frames, run.origins, origins):
        assert np.array_equal(a.ego, b.ego) and np.array_equal(oa, ob)
        for ma, mb in zip(a.measurements, b.measurements):
            for field in ("kinematic", "box", "shape", "heat"):
                assert np.array_equal(getattr(ma, field), getattr(mb, field))
            assert ma.score == mb.score


def test_frames_without_features_or_labels(tmp_path):
    f = MeasurementFrame(0, [Measurement([0.1, 0.2, 0.3, 1 / 3], [1, 2, 3], 0.7)])
    path = tmp_path / "f.jsonl"
    io.write_frames(path, [f])
    frames, origins = io.read_frames(path)
    assert origins is None and frames[0].measurements[0].shape is None
    assert frames[0].measurements[0].kinematic[3] == 1 / 3


def test_truth_round_trip(tmp_path, run):
    path = tmp_path / "t.jsonl"
    io.write_truth(path, run.scenario)
    sc = io.read_truth(path)
    assert sc.duration == run.scenario.duration and sc.dt == run.scenario.dt
    for k in range(sc.duration):
        ia, sa = run.scenario.truth_at(k)
        ib, sb = sc.truth_at(k)
        assert np.array_equal(ia, ib) and np.array_equal(sa, sb)


def test_tracks_round_trip(tmp_path):
    est = [[Estimate(3, KinematicState.from_vector(np.arange(6) / 7), 0.123456789, 0.9)], []]
    path = tmp_path / "tr.jsonl"
    io.write_tracks(path, est)
    back = io.read_tracks(path)
    assert back[1] == [] and back[0][0].track_id == 3
    assert np.array_equal(back[0][0].state.to_vector(), np.arange(6) / 7)
    assert back[0][0].score == 0.123456789


def test_truncated_file_names_record(tmp_path, run):
    path = tmp_path / "f.jsonl"
    io.write_frames(path, run.frames)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(io.ParseError) as exc:
        io.read_frames(path)
    assert "record" in str(exc.value) and exc.value.record >= 1


def test_text_version_and_format_checks(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"format":"nebp-tracks","version":"2.0"}\n')
    with pytest.raises(io.ParseError):
        io.read_tracks(path)
    path.write_text('{"format":"nebp-frames","version":"1.0"}\n')
    with pytest.raises(io.ParseError):
        io.read_tracks(path)
    path.write_text('{"format":"nebp-tracks","version":"1.3"}\n{"step":0,"tracks":[]}\n')
    assert io.read_tracks(path) == [[]]


def test_non_finite_values_rejected(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"format":"nebp-tracks","version":"1.0"}\n'
                    '{"step":0,"tracks":[{"id":1,"state":[NaN,0,0,0,0,0],"score":0.5}]}\n')
    with pytest.raises(io.ParseError):
        io.read_tracks(path)
    est = [[Estimate(1, KinematicState.from_vector(np.zeros(6)), float("inf"), 1.0)]]
    with pytest.raises(ValueError):
        io.write_tracks(tmp_path / "y.jsonl", est)


def test_dimension_mismatch_rejected(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"format":"nebp-tracks","version":"1.0"}\n'
                    '{"step":0,"tracks":[{"id":1,"state":[0,0,0],"score":0.5}]}\n')
    with pytest.raises(io.ParseError, match="record 1"):
        io.read_tracks(path)


def test_weights_round_trip_exact(tmp_path):
    stack = NeuralStack.init(np.random.default_rng(0))
    path = tmp_path / "w.bin"
    io.write_weights(path, stack)
    back = io.read_weights(path)
    for a, b in zip(stack.networks(), back.networks()):
        assert a.output == b.output and a.slope == b.slope
        assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))


def _patch_version(path, major, minor):
    data = bytearray(path.read_bytes())
    struct.pack_into("<HH", data, len(io.WEIGHTS_MAGIC), major, minor)
    path.write_bytes(bytes(data))


def test_weights_versioning(tmp_path):
    path = tmp_path / "w.bin"
    io.write_weights(path, NeuralStack.init(np.random.default_rng(0)))
    _patch_version(path, 1, 7)
    io.read_weights(path)
    _patch_version(path, 2, 0)
    with pytest.raises(InputError, match="major"):
        io.read_weights(path)


def test_weights_truncated_or_wrong_dims(tmp_path):
    path = tmp_path / "w.bin"
    stack = NeuralStack.init(np.random.default_rng(0))
    io.write_weights(path, stack)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(InputError):
        io.read_weights(path)
    path.write_bytes(b"garbage")
    with pytest.raises(InputError):
        io.read_weights(path)
    from nebp.neural import MLP
    stack.motion = MLP.init([5, 3, 1], np.random.default_rng(1))
    io.write_weights(path, stack)
    with pytest.raises(InputError, match="motion"):
        io.read_weights(path)


def test_loss_curve_and_metrics(tmp_path):
    io.write_loss_curve(tmp_path / "l.csv", [1.0, 0.5], [1.1, 0.6])
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "epoch,train_loss,validation_loss"
    row = io.MetricRow("BP", 1.0, 0.5, 0.3, 0.2, 0.9, 0.4, 2)
    io.write_metrics(tmp_path / "m.csv", [row])
    assert "BP" in io.format_metrics([row])
