"""Train the network stack and compare BP, affinity-only, FAR-only and full enhancement.

The default suite has heavy clutter (mean 30 per frame), 30% of it placed
around real objects, with appearance features that separate clutter from
objects.
"""
import argparse
import time

from nebp import io
from nebp.config import RunConfig
from nebp.experiments import compare_arms, make_suite, train_from_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--train-scenarios", type=int, default=50)
    ap.add_argument("--eval-scenarios", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--particles", type=int, default=1000)
    ap.add_argument("--near-clutter", type=float, default=0.3)
    ap.add_argument("--weights-out", help="save the trained stack here")
    args = ap.parse_args()
    cfg = RunConfig(seed=args.seed, clutter_mean=30.0, near_clutter_fraction=args.near_clutter,
                    train_scenarios=args.train_scenarios, eval_scenarios=args.eval_scenarios,
                    epochs=args.epochs, particles=args.particles, train_particles=args.particles)
    t0 = time.perf_counter()
    outcome = train_from_config(cfg)
    print(f"held-out loss {outcome.heldout_initial:.4f} -> {outcome.heldout_trained:.4f} "
          f"({time.perf_counter() - t0:.0f} s)")
    print("train loss per epoch:", " ".join(f"{v:.3f}" for v in outcome.result.train_loss))
    if args.weights_out:
        io.write_weights(args.weights_out, outcome.result.stack)
    runs = make_suite(cfg, "eval", cfg.eval_scenarios)
    print(io.format_metrics(compare_arms(runs, cfg.tracker_config(), cfg.seed, outcome.result.stack)))


if __name__ == "__main__":
    main()
