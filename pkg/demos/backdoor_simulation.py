"""Average width of Tian-Pearl and partial-observation bounds on random models.

Each sample draws CPTs for X <- W -> Y, X <- U -> Y, X -> Y with binary W
and U, keeps P(X, Y, W) and P(U), and bounds P(y | do(x)).

    python demos/backdoor_simulation.py --samples 200 --out sim.csv
"""
import argparse
import json

from causalbounds.experiments import ExperimentConfig, run_experiment, write_csv
from causalbounds.nlp import SolverConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--restarts", type=int, default=20)
    ap.add_argument("--start", choices=("multistart", "box-midpoint"), default="multistart")
    ap.add_argument("--out", help="CSV path for per-sample rows")
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(scenario="backdoor-sim", sample_count=args.samples, seed=args.seed,
                           solver=SolverConfig(restarts=args.restarts), start=args.start)
    rows, summary = run_experiment(cfg)
    if args.out:
        write_csv(rows, args.out)
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
