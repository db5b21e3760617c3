"""Bounds on the recovery rate under a drug when age is not recorded.

Blood type (W) is observed together with treatment and recovery; age (U)
is latent and only its population share is known. Compares Tian-Pearl
bounds, the multi-start bounds, a single local solve from the box midpoint
and the ground truth from the full table.

    python demos/drug_example.py [--restarts N]
"""
import argparse

from causalbounds.bounds import BackdoorInstance, compute_bounds
from causalbounds.fixtures import drug_example
from causalbounds.nlp import SolverConfig
from causalbounds.tables import adjust_backdoor, tian_pearl_from_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--restarts", type=int, default=20)
    args = ap.parse_args(argv)

    d = drug_example()
    inst = BackdoorInstance(d.observed, d.prior)
    truth = adjust_backdoor(d.full, 0, 0, ["W", "U"])
    tp = tian_pearl_from_table(d.observed, 0, 0)
    cfg = SolverConfig(restarts=args.restarts)
    full = compute_bounds(inst, cfg)
    single = compute_bounds(inst, cfg, start="box-midpoint")
    tight = compute_bounds(inst, cfg, extra_independence=True, diagram=d.diagram)
    loose = compute_bounds(BackdoorInstance(d.observed, None, u_states=2), cfg)

    print(f"P(recovery | do(drug)) from the full table: {truth:.4f}")
    rows = [
        ("Tian-Pearl", tp.lb, tp.ub),
        ("no prior on age", loose.lb, loose.ub),
        ("multi-start", full.lb, full.ub),
        ("box-midpoint start only", single.lb, single.ub),
        ("with W, U independent", tight.lb, tight.ub),
    ]
    for label, lb, ub in rows:
        print(f"  {label:<26} [{lb:.4f}, {ub:.4f}]  midpoint {(lb + ub) / 2:.4f}")
    print(f"  independence seed value    {full.seed_value:.4f}")
    print()
    print("The single start stops at a local minimum; the multi-start lower bound")
    print("is the global one and sits below it.")


if __name__ == "__main__":
    main()
