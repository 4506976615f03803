"""Command-line entry point: simulate, track, train, eval, compare."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .config import RunConfig
from .experiments import compare_arms, make_suite, train_from_config
from .metrics import TrackOutput, evaluate, truth_steps
from .neural import NeuralEnhancer, NeuralStack
from .rng import substream
from .simulator import simulate
from .tracker import Tracker
from .types import InputError


def _config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    neural = None if getattr(args, "neural", None) is None else args.neural == "on"
    return cfg.override(seed=args.seed, particles=getattr(args, "particles", None),
                        iters=getattr(args, "iters", None), neural=neural,
                        weights=getattr(args, "weights", None))


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _config(args)
    run = simulate(cfg.scenario_config(), cfg.detector_config(), cfg.seed)
    out = _outdir(args.out)
    io.write_frames(out / "frames.jsonl", run.frames, run.origins)
    io.write_truth(out / "truth.jsonl", run.scenario)
    print(f"wrote {out / 'frames.jsonl'} and {out / 'truth.jsonl'}")
    return 0


def cmd_track(args) -> int:
    cfg = _config(args)
    frames, _ = io.read_frames(args.frames)
    enhancer = NeuralEnhancer(io.read_weights(cfg.weights)) if cfg.neural else None
    tracker = Tracker(cfg.tracker_config(), substream(cfg.seed, "particles"), enhancer)
    estimates = [tracker.step(f).estimates for f in frames]
    io.write_tracks(args.out, estimates)
    print(f"wrote {args.out} ({len(estimates)} steps)")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    out = _outdir(args.out)
    if args.identity:
        stack = NeuralStack.init(substream(cfg.seed, "training")).identity_reduction()
        io.write_weights(out / "weights.bin", stack)
        print(f"wrote identity-reduction weights to {out / 'weights.bin'}")
        return 0
    outcome = train_from_config(cfg)
    io.write_weights(out / "weights.bin", outcome.result.stack)
    io.write_loss_curve(out / "loss.csv", outcome.result.train_loss, outcome.result.validation_loss)
    print(f"held-out loss {outcome.heldout_initial:.4f} -> {outcome.heldout_trained:.4f}")
    print(f"wrote {out / 'weights.bin'} and {out / 'loss.csv'}")
    return 0


def cmd_eval(args) -> int:
    tracks = io.read_tracks(args.tracks)
    scenario = io.read_truth(args.truth)
    if len(tracks) != scenario.duration:
        raise InputError(f"{len(tracks)} track steps but {scenario.duration} truth steps")
    rep = evaluate([TrackOutput.from_estimates(e) for e in tracks], truth_steps(scenario))
    row = io.MetricRow(Path(args.tracks).stem, rep.gospa_mean, rep.localization_mean, rep.missed_mean,
                       rep.false_mean, rep.amota, rep.amotp, rep.id_switches)
    print(io.format_metrics([row]))
    if args.out:
        io.write_metrics(args.out, [row])
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    if cfg.weights:
        stack = io.read_weights(cfg.weights)
    else:
        print(f"training on {cfg.train_scenarios} scenarios ...", file=sys.stderr)
        stack = train_from_config(cfg).result.stack
    runs = make_suite(cfg, "eval", cfg.eval_scenarios)
    rows = compare_arms(runs, cfg.tracker_config(), cfg.seed, stack)
    print(io.format_metrics(rows))
    if args.out:
        io.write_metrics(args.out, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nebp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tracking=False):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        if tracking:
            p.add_argument("--particles", type=int)
            p.add_argument("--iters", type=int, help="message-passing iterations")
            p.add_argument("--neural", choices=("off", "on"))
            p.add_argument("--weights", help="weight file for --neural on")

    p = sub.add_parser("simulate", help="generate a synthetic scenario and detections")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="run the tracker on a frames file")
    common(p, tracking=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--out", required=True, help="tracks file")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("train", help="train the network stack on synthetic scenarios")
    common(p)
    p.add_argument("--identity", action="store_true",
                   help="write weights that reduce the enhanced tracker to plain BP")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a tracks file against a truth file")
    p.add_argument("--tracks", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="metrics CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="BP and the three enhanced variants on one suite")
    common(p, tracking=True)
    p.add_argument("--out", help="metrics CSV")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
