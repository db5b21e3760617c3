"""Command-line entry point.

Exit codes: 0 success, 2 bad input, 3 no valid adjustment set, 4 solver
failure, 5 exact check skipped because the tables are too large.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bounds import BackdoorInstance, FrontdoorInstance, compute_bounds
from .diagram import d_separated, diagram_from_dict, diagram_to_dict, satisfies_backdoor, satisfies_frontdoor
from .errors import (
    CausalBoundsError,
    CriterionError,
    InfeasibleError,
    NonconvergenceError,
    ScaleError,
)
from .experiments import ExperimentConfig, run_experiment, write_csv
from .fixtures import load_cpts
from .nlp import SolverConfig
from .reduce import equivalent_cpts, make_equivalent_tuple, suggest_p, verify_equivalence
from .tables import (
    JointTable,
    adjust_backdoor,
    adjust_frontdoor,
    cpt_to_dict,
    joint_from_cpts,
    required_sample_size,
    tian_pearl_from_table,
)

EXIT_OK, EXIT_INPUT, EXIT_CRITERION, EXIT_SOLVER, EXIT_SCALE = 0, 2, 3, 4, 5


class InputError(Exception):
    """Bad file or argument; maps to exit code 2."""


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _load_model(path):
    data = _read_json(path)
    try:
        return diagram_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed diagram ({exc})") from None
    except CausalBoundsError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_data(path, G=None) -> JointTable:
    """A joint table, or CPTs (``{"cpts": [...]}``) multiplied out over ``G``."""
    data = _read_json(path)
    try:
        if isinstance(data, dict) and "cpts" in data:
            if G is None:
                raise InputError(f"{path}: CPT data needs a model")
            return joint_from_cpts(G, load_cpts(data, G))
        return JointTable.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed table ({exc})") from None
    except (ValueError, CausalBoundsError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None


def _names(text):
    return [t for t in (text or "").split(",") if t]


def _solver(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "restarts", None) is not None:
        cfg = cfg.replace(restarts=args.restarts)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    return cfg


def _emit(args, payload: dict):
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")


# -- subcommands -------------------------------------------------------------------

def cmd_bounds(args) -> int:
    G = _load_model(args.model)
    data = _load_data(args.data, G)
    t, o = args.treatment, args.outcome
    observed = [v for v in data.scope if v not in (t, o)]
    if args.prior and args.no_prior:
        raise InputError("--prior and --no-prior are exclusive")
    if args.prior:
        prior = _load_data(args.prior)
        latent = list(prior.scope)
    else:
        latent = [n for n in G.nodes if n not in data.scope]
        prior = None
        if not args.no_prior:
            if latent:
                raise InputError("give --prior for the latent variables, or --no-prior")
    for n in list(data.scope) + latent:
        if n not in G:
            raise InputError(f"{n!r} is not a node of the model")
    Q = observed + latent
    check = satisfies_backdoor if args.criterion == "backdoor" else satisfies_frontdoor
    if not check(G, Q, t, o):
        raise CriterionError(f"{{{', '.join(Q)}}} does not satisfy the {args.criterion} criterion for ({t}, {o})")
    u_states = math.prod(G.states(n) for n in latent) if latent else 1
    x, y = args.target
    if args.criterion == "backdoor":
        inst = BackdoorInstance(data, prior, target=(x, y), treatment=t, outcome=o, u_states=u_states)
    else:
        inst = FrontdoorInstance(data, prior, target=(x, y), treatment=t, outcome=o, u_states=u_states)
    tp = tian_pearl_from_table(data, x, y, t, o)
    res = compute_bounds(inst, _solver(args), extra_independence=args.extra_independence, diagram=G)
    print(f"target              P({o}={y} | do({t}={x}))")
    print(f"observed W          {', '.join(observed) or '(none)'}")
    print(f"latent U            {', '.join(latent) or '(none)'}{'  [no prior]' if prior is None else ''}")
    print(f"Tian-Pearl          [{tp.lb:.4f}, {tp.ub:.4f}]  gap {tp.width:.4f}")
    print(f"proposed            [{res.lb:.4f}, {res.ub:.4f}]  gap {res.gap:.4f}")
    print(f"midpoint            {res.midpoint:.4f}")
    print(f"independence seed   {res.seed_value:.4f}")
    for label, sol in (("min", res.min_solution), ("max", res.max_solution)):
        print(f"{label} solve           blocks {sol.blocks}, local solves {sol.local_solves}, "
              f"failed {sol.failed_solves}, max violation {sol.max_violation:.1e}")
    for note in res.notes:
        print(f"note                {note}")
    payload = res.to_dict()
    payload["tian_pearl"] = {"lb": tp.lb, "ub": tp.ub}
    _emit(args, payload)
    return EXIT_OK


def cmd_reduce(args) -> int:
    G = _load_model(args.model)
    if args.z not in G:
        raise InputError(f"{args.z!r} is not a node of the model")
    O = _load_data(args.data, G)
    m = G.states(args.z)
    p = args.p
    if p is None:
        if args.samples is None:
            raise InputError("give --p, or --samples to pick p from the sample size")
        p = suggest_p(m, args.samples, G.states(args.treatment), G.states(args.outcome))
        print(f"chose p = {p} for {args.samples} samples")
    if not 1 <= p <= m:
        raise InputError(f"--p must lie in 1..{m}")
    tup = make_equivalent_tuple(G, O, args.z, p, args.treatment, args.outcome, order=args.order)
    mp = tup.mapping
    print(f"{args.z} ({m} states) -> {mp.w_name} ({mp.p}) x {mp.u_name} ({mp.q}), order {mp.order}"
          + (f", {mp.virtual_states} virtual states" if mp.padded else ""))
    print(f"{tup.criterion} set {set(tup.adjustment)} -> {set(tup.adjustment_prime)}")
    need_full = required_sample_size([O.states])
    need_bounds = required_sample_size([tup.pxyw.states, tup.pu.states])
    print(f"samples needed: full table {need_full}, bounding problem {need_bounds}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "model.json").write_text(json.dumps(diagram_to_dict(tup.g_prime), indent=1))
        (out / "mapping.json").write_text(json.dumps(mp.to_dict(), indent=1))
        (out / "observed.json").write_text(json.dumps(tup.pxyw.to_dict()))
        (out / "prior.json").write_text(json.dumps(tup.pu.to_dict()))
        (out / "cpts.json").write_text(json.dumps({"cpts": [cpt_to_dict(c) for c in equivalent_cpts(tup)]}))
        print(f"wrote {out}/{{model,mapping,observed,prior,cpts}}.json")
    if args.show_cpts:
        for c in equivalent_cpts(tup):
            print(f"P({c.child} | {', '.join(c.parent_names) or '-'}): "
                  + " ".join(f"{v:.6g}" for v in c.table.reshape(-1)))
    try:
        rep = verify_equivalence(G, O, tup)
    except ScaleError as exc:
        print(f"equivalence check skipped: {exc}")
        return EXIT_SCALE
    print(f"effect before {rep.effect_original:.12g}, after {rep.effect_equivalent:.12g}, "
          f"difference {rep.difference:.1e} ({'pass' if rep.passed else 'FAIL'})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    data = _read_json(args.config) if args.config else {}
    if args.scenario:
        data["scenario"] = args.scenario
    for key in ("sample_count", "z_states", "p", "seed", "workers", "start"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    try:
        cfg = ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad experiment config: {exc}") from None
    if args.restarts is not None:
        cfg.solver = cfg.solver.replace(restarts=args.restarts)
    out = args.out or cfg.out

    def progress(row):
        if args.verbose:
            print(f"{row.sample_id:5d} truth {row.true_effect:.4f} tp [{row.tp_lb:.4f}, {row.tp_ub:.4f}] "
                  f"ours [{row.our_lb:.4f}, {row.our_ub:.4f}] {row.status}", file=sys.stderr)

    rows, summary = run_experiment(cfg, progress)
    if out:
        write_csv(rows, out)
        Path(str(out) + ".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    else:
        sys.stdout.write(write_csv(rows))
    print(json.dumps(summary, indent=2), file=sys.stderr if not out else sys.stdout)
    return EXIT_SOLVER if summary["failures"] else EXIT_OK


def cmd_dsep(args) -> int:
    G = _load_model(args.model)
    A, B, C = _names(args.a), _names(args.b), _names(args.given)
    sep = d_separated(G, A, B, C)
    print(f"{{{','.join(A)}}} and {{{','.join(B)}}} are {'d-separated' if sep else 'd-connected'} "
          f"given {{{','.join(C)}}}")
    if args.x and args.y:
        print(f"back-door({{{','.join(C)}}}, {args.x}, {args.y}): {satisfies_backdoor(G, C, args.x, args.y)}")
        print(f"front-door({{{','.join(C)}}}, {args.x}, {args.y}): {satisfies_frontdoor(G, C, args.x, args.y)}")
    return EXIT_OK


def cmd_adjust(args) -> int:
    G = _load_model(args.model)
    data = _load_data(args.data, G)
    Z = _names(args.z)
    t, o = args.treatment, args.outcome
    check = satisfies_backdoor if args.criterion == "backdoor" else satisfies_frontdoor
    if not check(G, Z, t, o):
        raise CriterionError(f"{{{', '.join(Z)}}} does not satisfy the {args.criterion} criterion for ({t}, {o})")
    x, y = args.target
    fn = adjust_backdoor if args.criterion == "backdoor" else adjust_frontdoor
    value = fn(data, x, y, Z, t, o)
    tp = tian_pearl_from_table(data, x, y, t, o)
    print(f"P({o}={y} | do({t}={x})) = {value:.6f}")
    print(f"Tian-Pearl [{tp.lb:.4f}, {tp.ub:.4f}]")
    _emit(args, {"effect": value, "tian_pearl": {"lb": tp.lb, "ub": tp.ub}})
    return EXIT_OK


def _shape(text):
    try:
        dims = [int(t) for t in text.lower().split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"table shape must look like 2x2x16, got {text!r}") from None
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("state counts must be positive")
    return dims


def cmd_samplesize(args) -> int:
    tables = list(args.tables)
    if args.z_states:
        if args.p:
            q = -(-args.z_states // args.p)
            tables += [[2, 2, args.p], [q]]
        else:
            tables.append([2, 2, args.z_states])
    if not tables:
        raise InputError("give table shapes or --z-states")
    n = required_sample_size(tables, args.per_state)
    shapes = ", ".join("x".join(map(str, t)) for t in tables)
    print(f"{n}  (max cells over {shapes} times {args.per_state})")
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def _add_common(p, solver=True):
    p.add_argument("--out", help="write results to this path")
    if solver:
        p.add_argument("--seed", type=int, help="solver RNG seed")
        p.add_argument("--restarts", type=int, help="hit-and-run restarts per block")


def _add_target(p):
    p.add_argument("--target", nargs=2, type=int, default=(0, 0), metavar=("X", "Y"),
                   help="0-based states of treatment and outcome (default 0 0)")
    p.add_argument("--treatment", default="X")
    p.add_argument("--outcome", default="Y")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="causalbounds", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="bound P(y | do(x)) from P(X,Y,W) and P(U)")
    p.add_argument("model", help="diagram JSON")
    p.add_argument("data", help="P(X,Y,W) as a joint-table JSON")
    p.add_argument("--prior", help="P(U) as a joint-table JSON")
    p.add_argument("--no-prior", action="store_true", help="bound without P(U)")
    p.add_argument("--criterion", choices=("backdoor", "frontdoor"), default="backdoor")
    p.add_argument("--extra-independence", action="store_true",
                   help="also impose P(w,u) = P(w)P(u); checked against the diagram")
    _add_target(p)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("reduce", help="factor a variable into (W, U)")
    p.add_argument("model")
    p.add_argument("data", help="joint table or CPTs over the model")
    p.add_argument("--z", required=True, help="variable to factor")
    p.add_argument("--p", type=int, help="number of W states")
    p.add_argument("--samples", type=int, help="available samples; picks --p when it is omitted")
    p.add_argument("--order", choices=("w_major", "u_major"), default="w_major")
    p.add_argument("--show-cpts", action="store_true", help="print the CPTs of the new diagram")
    _add_target(p)
    _add_common(p, solver=False)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", help="run a simulation study")
    p.add_argument("config", nargs="?", help="experiment config JSON")
    p.add_argument("--scenario", choices=("backdoor-sim", "highdim-sim", "custom"))
    p.add_argument("--samples", dest="sample_count", type=int)
    p.add_argument("--z-states", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--start", choices=("multistart", "box-midpoint"))
    p.add_argument("-v", "--verbose", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dsep", help="test d-separation (and the adjustment criteria)")
    p.add_argument("model")
    p.add_argument("--a", required=True, help="comma-separated node set")
    p.add_argument("--b", required=True)
    p.add_argument("--given", default="")
    p.add_argument("--x", help="with --y, also test --given as a back-door/front-door set")
    p.add_argument("--y")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("adjust", help="evaluate the adjustment formula on a full table")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--z", required=True, help="comma-separated adjustment set")
    p.add_argument("--criterion", choices=("backdoor", "frontdoor"), default="backdoor")
    _add_target(p)
    _add_common(p, solver=False)
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("samplesize", help="samples needed for a set of tables")
    p.add_argument("tables", nargs="*", type=_shape, help="table shapes such as 2x2x16")
    p.add_argument("--z-states", type=int, help="shortcut: X, Y binary and Z with this many states")
    p.add_argument("--p", type=int, help="with --z-states: W states of the factored problem")
    p.add_argument("--per-state", type=int, default=30)
    p.set_defaults(func=cmd_samplesize)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CriterionError as exc:
        print(f"criterion violation: {exc}", file=sys.stderr)
        return EXIT_CRITERION
    except (NonconvergenceError, InfeasibleError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ScaleError as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (CausalBoundsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
