"""Bounds for a 256-state adjustment variable from a 16 x 16 factorization.

Z -> X, Z -> Y, X -> Y with |Z| = 256 needs about 30720 samples to fill the
full table. Factoring Z into W (16 states, observed) and U (16 states, only
its margin kept) brings that to 1920. This script runs the simulation study
and, with ``--ensemble``, also intersects the intervals from several
factorizations of one instance.

    python demos/highdim_study.py --samples 10
    python demos/highdim_study.py --ensemble
"""
import argparse
import json

from causalbounds.bounds import BackdoorInstance, compute_bounds, ensemble_bounds
from causalbounds.experiments import ExperimentConfig, highdim_diagram, run_experiment
from causalbounds.nlp import SolverConfig
from causalbounds.reduce import make_equivalent_tuple
from causalbounds.tables import (
    adjust_backdoor,
    generate_cpts,
    joint_from_cpts,
    required_sample_size,
    tian_pearl_from_table,
)


def ensemble(seed, restarts):
    G = highdim_diagram(256)
    joint = joint_from_cpts(G, generate_cpts(G, seed=seed))
    truth = adjust_backdoor(joint, 0, 0, ["Z"])
    tp = tian_pearl_from_table(joint, 0, 0)
    print(f"truth {truth:.4f}; Tian-Pearl [{tp.lb:.4f}, {tp.ub:.4f}]")
    results = []
    for p in (8, 16, 32):
        tup = make_equivalent_tuple(G, joint, "Z", p)
        res = compute_bounds(BackdoorInstance(tup.pxyw, tup.pu), SolverConfig(restarts=restarts))
        need = required_sample_size([tup.pxyw.states, tup.pu.states])
        print(f"  p={p:<3} [{res.lb:.4f}, {res.ub:.4f}]  needs {need} samples")
        results.append(res)
    iv = ensemble_bounds(results)
    print(f"intersection [{iv.lb:.4f}, {iv.ub:.4f}]")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--start", choices=("multistart", "box-midpoint"), default="multistart")
    ap.add_argument("--ensemble", action="store_true", help="one instance, several factorizations")
    args = ap.parse_args(argv)

    if args.ensemble:
        ensemble(args.seed, args.restarts)
        return
    cfg = ExperimentConfig(scenario="highdim-sim", sample_count=args.samples, z_states=256, p=16,
                           seed=args.seed, solver=SolverConfig(restarts=args.restarts), start=args.start)
    _, summary = run_experiment(cfg)
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
