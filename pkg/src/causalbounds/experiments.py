"""Monte Carlo comparison of Tian-Pearl bounds and the partial-observation bounds.

Each sample draws random CPTs for a fixed diagram, computes the true effect
with the adjustment formula, then hides part of the adjustment set and
bounds the effect from what remains. Results go to a CSV with one row per
sample and a JSON summary.

Scenarios
---------
backdoor-sim
    X <- W -> Y, X <- U -> Y, X -> Y with ``p`` states for W and
    ``z_states / p`` for U. Only P(X, Y, W) and P(U) are kept.
highdim-sim
    Z -> X, Z -> Y, X -> Y with ``z_states`` states for Z. Z is factored
    into (W, U) with ``p`` W-states and the projected P(X, Y, W), P(U) are
    kept.
custom
    Any diagram (``model``) with named observed (``observed``) and latent
    (``latent``) parts of a back-door set.

Every sample uses its own random stream derived from ``(seed, sample_id)``,
so results do not depend on the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bounds import BackdoorInstance, compute_bounds
from .diagram import CausalDiagram, build_diagram, diagram_from_dict, satisfies_backdoor
from .errors import CausalBoundsError, CriterionError, InfeasibleError, NonconvergenceError
from .nlp import SolverConfig
from .reduce import make_equivalent_tuple
from .tables import adjust_backdoor, generate_cpts, joint_from_cpts, tian_pearl_from_table

__all__ = [
    "ExperimentConfig",
    "SampleRow",
    "run_sample",
    "run_experiment",
    "summarize",
    "write_csv",
    "read_csv",
    "load_config",
    "backdoor_diagram",
    "highdim_diagram",
    "COLUMNS",
]

SCENARIOS = ("backdoor-sim", "highdim-sim", "custom")
COLUMNS = ("sample_id", "true_effect", "tp_lb", "tp_ub", "tp_mid", "our_lb", "our_ub", "our_mid", "status")
COVER_TOL = 1e-6

# default multi-start effort per scenario; the 256-state study has 16
# blocks per direction, so fewer restarts keep it within desk-scale time
_DEFAULT_RESTARTS = {"backdoor-sim": 20, "highdim-sim": 5, "custom": 20}


def backdoor_diagram(w_states: int = 2, u_states: int = 2) -> CausalDiagram:
    return build_diagram(
        [("U", u_states), ("W", w_states), ("X", 2), ("Y", 2)],
        [("U", "X"), ("U", "Y"), ("W", "X"), ("W", "Y"), ("X", "Y")],
    )


def highdim_diagram(z_states: int = 256) -> CausalDiagram:
    return build_diagram([("Z", z_states), ("X", 2), ("Y", 2)], [("Z", "X"), ("Z", "Y"), ("X", "Y")])


@dataclass
class ExperimentConfig:
    """Settings for :func:`run_experiment`.

    ``solver`` defaults depend on the scenario (20 restarts, 5 for
    ``highdim-sim``). ``start`` is passed to :func:`compute_bounds`.
    """

    scenario: str = "backdoor-sim"
    sample_count: int = 1000
    z_states: int = 4
    p: int = 2
    seed: int = 0
    solver: SolverConfig | None = None
    out: str | None = None
    sampler: str = "uniform"
    target: tuple[int, int] = (0, 0)
    start: str = "multistart"
    workers: int = 1
    model: Mapping | None = None
    observed: Sequence[str] = ()
    latent: Sequence[str] = ()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if self.scenario != "custom":
            if not 1 <= self.p <= self.z_states:
                raise ValueError(f"p must lie in 1..z_states, got p={self.p}, z_states={self.z_states}")
            if self.scenario == "backdoor-sim" and self.z_states % self.p:
                raise ValueError("backdoor-sim needs z_states divisible by p")
        elif self.model is None or not self.observed or not self.latent:
            raise ValueError("custom scenario needs model, observed and latent")
        if self.solver is None:
            self.solver = SolverConfig(restarts=_DEFAULT_RESTARTS[self.scenario])
        self.target = tuple(self.target)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        data = dict(data)
        solver = data.pop("solver", None)
        if isinstance(solver, Mapping):
            data["solver"] = SolverConfig(**solver)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target"] = list(self.target)
        d["observed"] = list(self.observed)
        d["latent"] = list(self.latent)
        return d


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class SampleRow:
    sample_id: int
    true_effect: float
    tp_lb: float
    tp_ub: float
    tp_mid: float
    our_lb: float
    our_ub: float
    our_mid: float
    status: str = "ok"

    @property
    def covered(self) -> bool:
        return self.status == "ok" and self.our_lb - COVER_TOL <= self.true_effect <= self.our_ub + COVER_TOL


def _sample_seed(seed: int, sample_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(sample_id)])


def _instance(cfg: ExperimentConfig, rng):
    """``(joint, truth, BackdoorInstance)`` for one draw."""
    x, y = cfg.target
    if cfg.scenario == "backdoor-sim":
        G = backdoor_diagram(cfg.p, cfg.z_states // cfg.p)
        joint = joint_from_cpts(G, generate_cpts(G, cfg.sampler, rng))
        truth = adjust_backdoor(joint, x, y, ["W", "U"])
        inst = BackdoorInstance(joint.marginal(["X", "Y", "W"]), joint.marginal(["U"]), target=cfg.target)
    elif cfg.scenario == "highdim-sim":
        G = highdim_diagram(cfg.z_states)
        joint = joint_from_cpts(G, generate_cpts(G, cfg.sampler, rng))
        truth = adjust_backdoor(joint, x, y, ["Z"])
        tup = make_equivalent_tuple(G, joint, "Z", cfg.p)
        inst = BackdoorInstance(tup.pxyw, tup.pu, target=cfg.target)
    else:
        G = diagram_from_dict(cfg.model)
        Q = list(cfg.observed) + list(cfg.latent)
        if not satisfies_backdoor(G, Q, "X", "Y"):
            raise CriterionError(f"{Q} does not satisfy the back-door criterion for (X, Y)")
        joint = joint_from_cpts(G, generate_cpts(G, cfg.sampler, rng))
        truth = adjust_backdoor(joint, x, y, Q)
        inst = BackdoorInstance(joint.marginal(["X", "Y", *cfg.observed]), joint.marginal(list(cfg.latent)),
                                target=cfg.target)
    return joint, truth, inst


def run_sample(cfg: ExperimentConfig, sample_id: int) -> SampleRow:
    """Draw, solve and score one sample."""
    ss = _sample_seed(cfg.seed, sample_id)
    data_seq, solver_seq = ss.spawn(2)
    rng = np.random.default_rng(data_seq)
    joint, truth, inst = _instance(cfg, rng)
    x, y = cfg.target
    tp = tian_pearl_from_table(joint, x, y)
    solver = cfg.solver.replace(rng_seed=int(solver_seq.generate_state(1)[0]))
    try:
        res = compute_bounds(inst, solver, start=cfg.start)
        lb, ub, mid, status = res.lb, res.ub, res.midpoint, "ok"
    except (NonconvergenceError, InfeasibleError) as exc:
        lb = ub = mid = math.nan
        status = "solver_failure:" + type(exc).__name__
    return SampleRow(sample_id, truth, tp.lb, tp.ub, tp.midpoint, lb, ub, mid, status)


def _run_chunk(args):
    cfg, ids = args
    return [run_sample(cfg, i) for i in ids]


def run_experiment(cfg: ExperimentConfig, progress=None) -> tuple[list[SampleRow], dict]:
    """Run every sample and return ``(rows, summary)``.

    ``progress``, if given, is called with each finished row (serial runs
    only).
    """
    t0 = time.perf_counter()
    ids = list(range(cfg.sample_count))
    if cfg.workers > 1:
        chunks = [ids[i::cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = [r for chunk in pool.map(_run_chunk, [(cfg, c) for c in chunks]) for r in chunk]
        rows.sort(key=lambda r: r.sample_id)
    else:
        rows = []
        for i in ids:
            row = run_sample(cfg, i)
            rows.append(row)
            if progress is not None:
                progress(row)
    summary = summarize(rows)
    summary["scenario"] = cfg.scenario
    summary["seed"] = cfg.seed
    summary["restarts"] = cfg.solver.restarts
    summary["start"] = cfg.start
    summary["runtime_s"] = time.perf_counter() - t0
    return rows, summary


def summarize(rows: Sequence[SampleRow]) -> dict:
    """Average gaps over successful rows; coverage over all rows.

    A failed row counts as not covered, so failures lower the coverage
    instead of disappearing from it.
    """
    ok = [r for r in rows if r.status == "ok"]
    n = len(rows)

    def mean(vals):
        vals = list(vals)
        return float(np.mean(vals)) if vals else math.nan

    return {
        "samples": n,
        "failures": n - len(ok),
        "avg_tp_gap": mean(r.tp_ub - r.tp_lb for r in rows),
        "avg_our_gap": mean(r.our_ub - r.our_lb for r in ok),
        "coverage": sum(r.covered for r in rows) / n if n else math.nan,
        "tp_coverage": sum(r.tp_lb - COVER_TOL <= r.true_effect <= r.tp_ub + COVER_TOL for r in rows) / n if n else math.nan,
        "avg_tp_mid_error": mean(abs(r.tp_mid - r.true_effect) for r in rows),
        "avg_our_mid_error": mean(abs(r.our_mid - r.true_effect) for r in ok),
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: Sequence[SampleRow], path=None) -> str:
    """Write rows (header first) and return the CSV text.

    Floats use their shortest round-trip representation, so equal runs give
    byte-identical files.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, newline="")
    return text


def read_csv(path) -> list[SampleRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            SampleRow(int(d["sample_id"]), *(float(d[c]) for c in COLUMNS[1:-1]), status=d["status"])
            for d in reader
        ]
