"""File formats: line-delimited JSON for frames, truth and tracks; binary weights.

Every text file starts with a header line ``{"format": ..., "version": ...}``
followed by one record per time step. Floats are written with ``repr``
precision so a write/read cycle is exact; NaN and infinities are rejected
in both directions.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .neural.mlp import MLP
from .neural.networks import NETWORK_ORDER, NeuralStack
from .simulator import Scenario, Trajectory
from .tracker import Estimate
from .types import HEAT_DIM, MEAS_DIM, SHAPE_DIM, STATE_DIM, BOX_DIM, InputError, KinematicState
from .types import Measurement, MeasurementFrame

TEXT_VERSION = "1.0"
WEIGHTS_MAGIC = b"NEBPW\x00"
WEIGHTS_VERSION = (1, 0)
_OUTPUT_CODES = {"identity": 0, "sigmoid": 1}


class ParseError(InputError):
    def __init__(self, path, record: int, message: str):
        super().__init__(f"{path}: record {record}: {message}")
        self.record = record


# ---------------------------------------------------------------------------
# helpers


def _reject_constant(name):
    raise ValueError(f"non-finite value {name}")


def _dump(obj) -> str:
    return json.dumps(obj, allow_nan=False, separators=(",", ":"))


def _vec(v) -> list:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def _write_lines(path, kind: str, header_extra: dict, records) -> None:
    header = {"format": kind, "version": TEXT_VERSION, **header_extra}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump(header) + "\n")
        for rec in records:
            fh.write(_dump(rec) + "\n")


def _read_lines(path, kind: str) -> tuple[dict, list]:
    """Header and records; record index 0 is the header."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError(path, 0, "empty file")
    parsed = []
    for idx, line in enumerate(lines):
        try:
            obj = json.loads(line, parse_constant=_reject_constant)
        except ValueError as exc:
            raise ParseError(path, idx, str(exc)) from None
        if not isinstance(obj, dict):
            raise ParseError(path, idx, "expected a JSON object")
        parsed.append(obj)
    header = parsed[0]
    if header.get("format") != kind:
        raise ParseError(path, 0, f"expected format {kind!r}, found {header.get('format')!r}")
    version = str(header.get("version", ""))
    if version.split(".")[0] != TEXT_VERSION.split(".")[0]:
        raise ParseError(path, 0, f"unsupported version {version!r}")
    return header, parsed[1:]


def _field(path, idx, rec, key, dim=None, optional=False):
    if key not in rec:
        if optional:
            return None
        raise ParseError(path, idx, f"missing field {key!r}")
    val = rec[key]
    if dim is None:
        return val
    arr = np.asarray(val, dtype=float)
    if arr.shape != (dim,):
        raise ParseError(path, idx, f"field {key!r} has shape {arr.shape}, expected ({dim},)")
    return arr


def _check_steps(path, records):
    for idx, rec in enumerate(records, start=1):
        if rec.get("step") != idx - 1:
            raise ParseError(path, idx, f"expected step {idx - 1}, found {rec.get('step')!r}")


# ---------------------------------------------------------------------------
# frames


def write_frames(path, frames: Sequence[MeasurementFrame], origins: Sequence | None = None) -> None:
    """One record per step; measurement origins (object id, -1 for clutter) are optional."""
    records = []
    for k, f in enumerate(frames):
        meas = []
        for j, m in enumerate(f.measurements):
            rec = {"id": j, "kinematic": _vec(m.kinematic), "box": _vec(m.box), "score": float(m.score)}
            if m.shape is not None:
                rec["shape"] = _vec(m.shape)
            if m.heat is not None:
                rec["heat"] = _vec(m.heat)
            if origins is not None:
                rec["origin"] = int(origins[k][j])
            meas.append(rec)
        records.append({"step": int(f.step), "ego": _vec(f.ego), "measurements": meas})
    _write_lines(path, "nebp-frames", {}, records)


def read_frames(path) -> tuple[list[MeasurementFrame], list | None]:
    _, records = _read_lines(path, "nebp-frames")
    _check_steps(path, records)
    frames, origins, labelled = [], [], True
    for idx, rec in enumerate(records, start=1):
        ego = _field(path, idx, rec, "ego", 2)
        meas, orig = [], []
        for m in _field(path, idx, rec, "measurements"):
            try:
                meas.append(Measurement(
                    _field(path, idx, m, "kinematic", MEAS_DIM),
                    _field(path, idx, m, "box", BOX_DIM),
                    float(_field(path, idx, m, "score")),
                    _field(path, idx, m, "shape", SHAPE_DIM, optional=True),
                    _field(path, idx, m, "heat", HEAT_DIM, optional=True)))
            except (InputError, TypeError, ValueError) as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(path, idx, str(exc)) from None
            if "origin" in m:
                orig.append(int(m["origin"]))
            else:
                labelled = False
        frames.append(MeasurementFrame(rec["step"], meas, ego))
        origins.append(np.asarray(orig, dtype=int))
    return frames, (origins if labelled else None)


# ---------------------------------------------------------------------------
# truth


def write_truth(path, scenario: Scenario) -> None:
    records = []
    for k in range(scenario.duration):
        objs = [{"id": int(t.object_id), "state": _vec(t.state_at(k)), "box": _vec(t.box),
                 "label": t.label} for t in scenario.alive(k)]
        records.append({"step": k, "ego": _vec(scenario.ego[k]), "objects": objs})
    _write_lines(path, "nebp-truth", {"dt": float(scenario.dt)}, records)


def read_truth(path) -> Scenario:
    header, records = _read_lines(path, "nebp-truth")
    _check_steps(path, records)
    dt = header.get("dt")
    if not isinstance(dt, (int, float)) or dt <= 0:
        raise ParseError(path, 0, "header needs a positive dt")
    tracks: dict = {}
    ego = []
    for idx, rec in enumerate(records, start=1):
        ego.append(_field(path, idx, rec, "ego", 2))
        for o in _field(path, idx, rec, "objects"):
            oid = int(_field(path, idx, o, "id"))
            state = _field(path, idx, o, "state", STATE_DIM)
            entry = tracks.setdefault(oid, {"birth": idx - 1, "states": [], "box": None, "label": None})
            if entry["birth"] + len(entry["states"]) != idx - 1:
                raise ParseError(path, idx, f"object {oid} reappears after a gap")
            entry["states"].append(state)
            entry["box"] = _field(path, idx, o, "box", BOX_DIM)
            entry["label"] = str(_field(path, idx, o, "label"))
    trajectories = [Trajectory(oid, e["birth"], np.array(e["states"]), e["box"], e["label"], None)
                    for oid, e in sorted(tracks.items())]
    return Scenario(len(records), float(dt), trajectories, np.array(ego).reshape(-1, 2))


# ---------------------------------------------------------------------------
# tracks


def write_tracks(path, per_step: Sequence[Sequence[Estimate]]) -> None:
    records = [{"step": k, "tracks": [{"id": int(e.track_id), "state": _vec(e.state.to_vector()),
                                       "score": float(e.score)} for e in est]}
               for k, est in enumerate(per_step)]
    _write_lines(path, "nebp-tracks", {}, records)


def read_tracks(path) -> list[list[Estimate]]:
    _, records = _read_lines(path, "nebp-tracks")
    _check_steps(path, records)
    out = []
    for idx, rec in enumerate(records, start=1):
        out.append([Estimate(int(_field(path, idx, t, "id")),
                             KinematicState.from_vector(_field(path, idx, t, "state", STATE_DIM)),
                             float(_field(path, idx, t, "score")), float("nan"))
                    for t in _field(path, idx, rec, "tracks")])
    return out


# ---------------------------------------------------------------------------
# weights


def write_weights(path, stack: NeuralStack) -> None:
    nets = stack.networks()
    buf = bytearray(WEIGHTS_MAGIC)
    buf += struct.pack("<HHI", *WEIGHTS_VERSION, len(nets))
    for net in nets:
        sizes = net.sizes
        buf += struct.pack("<BdI", _OUTPUT_CODES[net.output], net.slope, len(sizes))
        buf += struct.pack(f"<{len(sizes)}I", *sizes)
    for net in nets:
        for p in net.params():
            if not np.all(np.isfinite(p)):
                raise InputError("refusing to write non-finite weights")
            buf += np.ascontiguousarray(p, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(buf))


def read_weights(path) -> NeuralStack:
    data = Path(path).read_bytes()
    pos = 0

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise InputError(f"{path}: truncated weight file at byte {pos}")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    if data[:len(WEIGHTS_MAGIC)] != WEIGHTS_MAGIC:
        raise InputError(f"{path}: not a weight file")
    pos = len(WEIGHTS_MAGIC)
    major, _minor, count = take("<HHI")
    if major != WEIGHTS_VERSION[0]:
        raise InputError(f"{path}: weight format major version {major}, expected {WEIGHTS_VERSION[0]}")
    if count != len(NETWORK_ORDER):
        raise InputError(f"{path}: {count} networks, expected {len(NETWORK_ORDER)}")
    layouts = []
    codes = {v: k for k, v in _OUTPUT_CODES.items()}
    for _ in range(count):
        code, slope, n = take("<BdI")
        if code not in codes or n < 2:
            raise InputError(f"{path}: bad network descriptor")
        layouts.append((codes[code], slope, take(f"<{n}I")))
    nets = []
    for output, slope, sizes in layouts:
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.array(take(f"<{fan_in * fan_out}d")).reshape(fan_out, fan_in)
            b = np.array(take(f"<{fan_out}d"))
            ws.append(w)
            bs.append(b)
        if not all(np.all(np.isfinite(a)) for a in ws + bs):
            raise InputError(f"{path}: non-finite weights")
        nets.append(MLP(ws, bs, slope, output))
    if pos != len(data):
        raise InputError(f"{path}: {len(data) - pos} trailing bytes")
    reference = NeuralStack.init(np.random.default_rng(0))
    for name, net, ref in zip(NETWORK_ORDER, nets, reference.networks()):
        if net.sizes[0] != ref.sizes[0] or net.sizes[-1] != ref.sizes[-1]:
            raise InputError(f"{path}: network {name} maps {net.sizes[0]}->{net.sizes[-1]}, "
                             f"expected {ref.sizes[0]}->{ref.sizes[-1]}")
    return NeuralStack(*nets)


# ---------------------------------------------------------------------------
# tables


def write_loss_curve(path, train_loss: Sequence[float], validation_loss: Sequence[float] = ()) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "validation_loss"])
        for k, tl in enumerate(train_loss):
            vl = validation_loss[k] if k < len(validation_loss) else ""
            w.writerow([k, repr(float(tl)), repr(float(vl)) if vl != "" else ""])


@dataclass
class MetricRow:
    method: str
    gospa: float
    localization: float
    missed: float
    false: float
    amota: float
    amotp: float
    id_switches: int

    COLUMNS = ("method", "gospa", "localization", "missed", "false", "amota", "amotp", "id_switches")

    def values(self) -> list:
        return [getattr(self, c) for c in self.COLUMNS]


def write_metrics(path, rows: Sequence[MetricRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MetricRow.COLUMNS)
        for r in rows:
            w.writerow(r.values())


def format_metrics(rows: Sequence[MetricRow]) -> str:
    head = f"{'method':<16}{'GOSPA':>9}{'loc':>8}{'missed':>8}{'false':>8}{'AMOTA':>8}{'AMOTP':>8}{'IDS':>6}"
    lines = [head]
    for r in rows:
        lines.append(f"{r.method:<16}{r.gospa:>9.3f}{r.localization:>8.3f}{r.missed:>8.3f}"
                     f"{r.false:>8.3f}{r.amota:>8.3f}{r.amotp:>8.3f}{r.id_switches:>6d}")
    return "\n".join(lines)
