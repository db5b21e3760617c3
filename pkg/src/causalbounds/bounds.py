"""Bounds on P(y | do(x)) when the adjustment set is only partly observed.

The adjustment set splits into an observed part W, whose joint with X and
Y is known, and an unobserved part U, for which at most the marginal P(U)
is known. The unknown cells of P(X, Y, W, U) become the variables of a
sum-of-ratios program (see :mod:`causalbounds.nlp`); its minimum and
maximum bound the effect.

Variable layout (fixed so solutions serialize reproducibly):

* back-door: ``[a | b | c]``, each block indexed ``w * |U| + u``, with
  ``a = P(x, y, w, u)``, ``b = P(w, u)``, ``c = P(x, w, u)``;
* front-door: ``[a | b]``, each block indexed ``(x' * |W| + w) * |U| + u``,
  with ``a = P(x', y, w, u)``, ``b = P(x', w, u)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diagram import CausalDiagram, d_separated
from .errors import (
    CausalBoundsError,
    EmptyIntersectionError,
    InvalidMassError,
    MissingPriorError,
    PositivityError,
    ShapeMismatchError,
)
from .nlp import FractionalProgram, RatioTerm, Solution, SolverConfig, objective, solve
from .tables import Interval, JointTable

__all__ = [
    "BackdoorInstance",
    "FrontdoorInstance",
    "BoundsResult",
    "build_backdoor_program",
    "build_frontdoor_program",
    "independence_seed",
    "consistent_joint_seeds",
    "compute_bounds",
    "ensemble_bounds",
]

MASS_TOL = 1e-9


def _xyw_array(pxyw: JointTable, treatment: str, outcome: str) -> tuple[np.ndarray, tuple[str, ...]]:
    W = tuple(v for v in pxyw.scope if v not in (treatment, outcome))
    arr = pxyw.marginal([treatment, outcome, *W]).probs
    nx, ny = arr.shape[:2]
    return arr.reshape(nx, ny, -1), W


@dataclass
class BackdoorInstance:
    """Observed P(X, Y, W), optional prior P(U), and the target cell (x, y).

    Every scope variable of ``pxyw`` other than the treatment and outcome is
    treated as part of W; several U variables are flattened likewise.
    ``u_states`` is only needed when ``pu`` is absent.
    """

    pxyw: JointTable
    pu: JointTable | None
    target: tuple[int, int] = (0, 0)
    treatment: str = "X"
    outcome: str = "Y"
    u_states: int | None = None

    def __post_init__(self):
        self._arr, self.w_names = _xyw_array(self.pxyw, self.treatment, self.outcome)
        if self.pu is not None:
            if set(self.pu.scope) & set(self.pxyw.scope):
                raise ShapeMismatchError("U must be disjoint from X, Y and W")
            self._pu = self.pu.flat.astype(float)
            if self.u_states is not None and self.u_states != self._pu.size:
                raise ShapeMismatchError("u_states disagrees with the prior")
            self.u_states = self._pu.size
        else:
            if not self.u_states:
                raise MissingPriorError("u_states is required when P(U) is not given")
            self._pu = None
        x, y = self.target
        nx, ny, _ = self._arr.shape
        if not (0 <= x < nx and 0 <= y < ny):
            raise ValueError(f"target {self.target} outside the state space")

    @property
    def u_names(self) -> tuple[str, ...]:
        return self.pu.scope if self.pu is not None else ("U",)

    @property
    def w_states(self) -> int:
        return self._arr.shape[2]

    def observed(self):
        """``(P(x,y,w), P(w), P(x,w))`` as vectors over w."""
        x, y = self.target
        return self._arr[x, y], self._arr.sum(axis=(0, 1)), self._arr[x].sum(axis=0)


@dataclass
class FrontdoorInstance:
    """Front-door analogue of :class:`BackdoorInstance`; ``px`` is P(X)."""

    pxyw: JointTable
    pu: JointTable | None
    px: JointTable | None = None
    target: tuple[int, int] = (0, 0)
    treatment: str = "X"
    outcome: str = "Y"
    u_states: int | None = None

    def __post_init__(self):
        self._arr, self.w_names = _xyw_array(self.pxyw, self.treatment, self.outcome)
        margin = self._arr.sum(axis=(1, 2))
        if self.px is None:
            self.px = JointTable([self.treatment], margin, check=False)
        elif np.max(np.abs(self.px.flat - margin)) > MASS_TOL:
            raise InvalidMassError("P(X) disagrees with the X-margin of P(X, Y, W)")
        if self.pu is not None:
            self._pu = self.pu.flat.astype(float)
            self.u_states = self._pu.size
        else:
            if not self.u_states:
                raise MissingPriorError("u_states is required when P(U) is not given")
            self._pu = None
        pxw = self._arr.sum(axis=1)
        pw = pxw.sum(axis=0)
        if np.any((pw > 0) & (pxw <= 0)):
            raise PositivityError("front-door bounds need P(x', w) > 0 wherever P(w) > 0")
        x, y = self.target
        if not (0 <= x < self._arr.shape[0] and 0 <= y < self._arr.shape[1]):
            raise ValueError(f"target {self.target} outside the state space")

    @property
    def u_names(self) -> tuple[str, ...]:
        return self.pu.scope if self.pu is not None else ("U",)

    @property
    def w_states(self) -> int:
        return self._arr.shape[2]


def _frechet(p: np.ndarray, pu: np.ndarray | None, nu: int):
    """Box for P(v, u) given P(v) and, if known, P(u). Shapes (len(p), nu)."""
    p = np.asarray(p, dtype=float)
    if pu is None:
        return np.zeros((p.size, nu)), np.repeat(np.clip(p, 0.0, 1.0)[:, None], nu, axis=1)
    lo = np.maximum(0.0, p[:, None] + pu[None, :] - 1.0)
    hi = np.clip(np.minimum(p[:, None], pu[None, :]), 0.0, 1.0)
    # rounding in the inputs can cross lo over hi by an ulp
    return np.minimum(lo, hi), hi


def build_backdoor_program(inst: BackdoorInstance) -> FractionalProgram:
    """Program whose min / max over the feasible set bound the back-door effect.

    Variables ``a, b, c`` per ``(w, u)``; objective ``sum a b / c``.
    """
    A, B, C = inst.observed()
    nw, nu = A.size, inst.u_states
    m = nw * nu
    n = 3 * m
    terms = [RatioTerm(1.0, (k, m + k), (2 * m + k,)) for k in range(m)]
    A_eq = np.zeros((3 * nw, n))
    b_eq = np.zeros(3 * nw)
    for blk, rhs in enumerate((A, B, C)):
        for w in range(nw):
            A_eq[blk * nw + w, blk * m + w * nu: blk * m + (w + 1) * nu] = 1.0
            b_eq[blk * nw + w] = rhs[w]
    eye = np.eye(m)
    zero = np.zeros((m, m))
    A_in = np.block([[zero, -eye, eye], [eye, zero, -eye]])  # c <= b, a <= c
    b_in = np.zeros(2 * m)
    boxes = [_frechet(v, inst._pu, nu) for v in (A, B, C)]
    lo = np.concatenate([bx[0].ravel() for bx in boxes])
    hi = np.concatenate([bx[1].ravel() for bx in boxes])
    names = [f"{k}[w={w},u={u}]" for k in "abc" for w in range(nw) for u in range(nu)]
    return FractionalProgram(n, terms, A_eq, b_eq, A_in, b_in, lo, hi, names)


def build_frontdoor_program(inst: FrontdoorInstance) -> FractionalProgram:
    """Program whose min / max over the feasible set bound the front-door effect.

    Objective ``sum_{w,u} b[x,w,u] / P(x) * sum_x' a[x',w,u] P(x') / b[x',w,u]``;
    the ``x' = x`` summand reduces to ``a[x,w,u]``.
    """
    arr = inst._arr
    x, y = inst.target
    nx, _, nw = arr.shape
    nu = inst.u_states
    px = inst.px.flat
    if px[x] <= 0:
        raise PositivityError(f"P({inst.treatment}={x}) = 0")
    m = nx * nw * nu
    n = 2 * m

    def idx(xs, w, u):
        return (xs * nw + w) * nu + u

    terms = []
    for w in range(nw):
        for u in range(nu):
            bx = m + idx(x, w, u)
            for xs in range(nx):
                if xs == x:
                    terms.append(RatioTerm(1.0, (idx(x, w, u),)))
                else:
                    terms.append(RatioTerm(px[xs] / px[x], (bx, idx(xs, w, u)), (m + idx(xs, w, u),)))
    pxyw = arr[:, y, :]
    pxw = arr.sum(axis=1)
    A_eq = np.zeros((2 * nx * nw, n))
    b_eq = np.zeros(2 * nx * nw)
    for blk, rhs in enumerate((pxyw, pxw)):
        for xs in range(nx):
            for w in range(nw):
                r = blk * nx * nw + xs * nw + w
                A_eq[r, blk * m + idx(xs, w, 0): blk * m + idx(xs, w, 0) + nu] = 1.0
                b_eq[r] = rhs[xs, w]
    A_in = np.hstack([np.eye(m), -np.eye(m)])  # a <= b
    b_in = np.zeros(m)
    boxes = [_frechet(v.ravel(), inst._pu, nu) for v in (pxyw, pxw)]
    lo = np.concatenate([bx[0].ravel() for bx in boxes])
    hi = np.concatenate([bx[1].ravel() for bx in boxes])
    names = [f"{k}[x={xs},w={w},u={u}]" for k in "ab" for xs in range(nx) for w in range(nw) for u in range(nu)]
    return FractionalProgram(n, terms, A_eq, b_eq, A_in, b_in, lo, hi, names)


def build_program(inst) -> FractionalProgram:
    if isinstance(inst, FrontdoorInstance):
        return build_frontdoor_program(inst)
    return build_backdoor_program(inst)


def _prior_or_uniform(inst, fallback: bool) -> np.ndarray:
    if inst._pu is not None:
        return inst._pu
    if not fallback:
        raise MissingPriorError("the independence seed needs P(U); pass fallback=True for a uniform split")
    return np.full(inst.u_states, 1.0 / inst.u_states)


def independence_seed(inst, fallback: bool = False) -> np.ndarray:
    """Point of the program that treats U as independent of (X, Y, W).

    Every cell is the observed margin times P(u), which satisfies the
    Fréchet boxes because ``p q >= p + q - 1`` on the unit square. Without a
    prior this raises :class:`MissingPriorError` unless ``fallback`` is set,
    in which case the margins are split evenly over U (a heuristic start,
    still feasible because the boxes are then ``[0, p]``).
    """
    pu = _prior_or_uniform(inst, fallback)
    if isinstance(inst, FrontdoorInstance):
        arr = inst._arr
        _, y = inst.target
        blocks = (arr[:, y, :], arr.sum(axis=1))
        return np.concatenate([np.multiply.outer(v, pu).ravel() for v in blocks])
    return np.concatenate([np.outer(v, pu).ravel() for v in inst.observed()])


def _ipf(rows: np.ndarray, cols: np.ndarray, start: np.ndarray, iters: int = 500, tol: float = 1e-14) -> np.ndarray:
    """Scale ``start`` to row sums ``rows`` and column sums ``cols``."""
    M = start.copy()
    for _ in range(iters):
        rs = M.sum(axis=1)
        M *= np.divide(rows, rs, out=np.zeros_like(rows), where=rs > 0)[:, None]
        cs = M.sum(axis=0)
        M *= np.divide(cols, cs, out=np.zeros_like(cols), where=cs > 0)[None, :]
        if np.max(np.abs(M.sum(axis=1) - rows)) < tol:
            break
    rs = M.sum(axis=1)
    M *= np.divide(rows, rs, out=np.zeros_like(rows), where=rs > 0)[:, None]
    return M


def random_consistent_joint(pxyw: np.ndarray, pu: np.ndarray | None, nu: int, rng) -> np.ndarray:
    """A joint P(X, Y, W, U) with the given margins, shape ``pxyw.shape + (nu,)``."""
    cells = pxyw.reshape(-1)
    start = rng.dirichlet(np.ones(nu), size=cells.size) * rng.dirichlet(np.ones(nu))[None, :]
    start += 1e-300
    if pu is None:
        M = start / start.sum(axis=1, keepdims=True) * cells[:, None]
    else:
        M = _ipf(cells, pu, start)
    return M.reshape(pxyw.shape + (nu,))


def consistent_joint_seeds(inst, count: int, rng) -> list[np.ndarray]:
    """Program points read off random joints consistent with the observations."""
    seeds = []
    x, y = inst.target
    for _ in range(count):
        J = random_consistent_joint(inst._arr, inst._pu, inst.u_states, rng)
        if isinstance(inst, FrontdoorInstance):
            a = J[:, y, :, :]
            b = J.sum(axis=1)
            seeds.append(np.concatenate([a.ravel(), b.ravel()]))
        else:
            a = J[x, y]
            b = J.sum(axis=(0, 1))
            c = J[x].sum(axis=0)
            seeds.append(np.concatenate([a.ravel(), b.ravel(), c.ravel()]))
    return seeds


def _independence_rows(inst, prog: FractionalProgram):
    """Equalities stating that W and U are independent."""
    pu = inst._pu
    nu = inst.u_states
    nw = inst.w_states
    rows = []
    rhs = []
    if isinstance(inst, FrontdoorInstance):
        nx = inst._arr.shape[0]
        m = nx * nw * nu
        pw = inst._arr.sum(axis=(0, 1))
        for w in range(nw):
            for u in range(nu):
                r = np.zeros(prog.var_count)
                for xs in range(nx):
                    r[m + (xs * nw + w) * nu + u] = 1.0
                rows.append(r)
                rhs.append(pw[w] * pu[u])
    else:
        m = nw * nu
        _, pw, _ = inst.observed()
        for w in range(nw):
            for u in range(nu):
                r = np.zeros(prog.var_count)
                r[m + w * nu + u] = 1.0
                rows.append(r)
                rhs.append(pw[w] * pu[u])
    return np.array(rows), np.array(rhs)


@dataclass
class BoundsResult:
    interval: Interval
    midpoint: float
    min_solution: Solution
    max_solution: Solution
    seed_value: float
    heuristic_seed: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def lb(self) -> float:
        return self.interval.lb

    @property
    def ub(self) -> float:
        return self.interval.ub

    @property
    def gap(self) -> float:
        return self.interval.width

    def to_dict(self) -> dict:
        return {
            "lb": self.lb,
            "ub": self.ub,
            "midpoint": self.midpoint,
            "seed_value": self.seed_value,
            "restarts_used": max(self.min_solution.restarts_used, self.max_solution.restarts_used),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def compute_bounds(inst, cfg: SolverConfig | None = None, extra_independence: bool = False,
                   diagram: CausalDiagram | None = None, joint_seeds: int = 4,
                   start: str = "multistart") -> BoundsResult:
    """Solve both directions of the program for ``inst``.

    Starts are the independence seed (a uniform split when P(U) is absent),
    the midpoint of the variable boxes, ``joint_seeds`` points from random
    consistent joints, and ``cfg.restarts`` hit-and-run samples per
    independent block.

    ``start="box-midpoint"`` instead runs a single local solve per direction
    from the box midpoint. It is a diagnostic for comparing against
    single-start results: the interval it returns may be narrower than the
    true range and need not contain ``seed_value``.

    ``extra_independence`` adds ``P(w, u) = P(w) P(u)``. It needs the prior
    and a ``diagram`` in which W and U are d-separated by the empty set;
    otherwise :class:`CausalBoundsError` is raised, since imposing a false
    independence biases the bounds.
    """
    cfg = cfg or SolverConfig()
    if start not in ("multistart", "box-midpoint"):
        raise ValueError(f"start must be 'multistart' or 'box-midpoint', got {start!r}")
    prog = build_program(inst)
    notes = []
    if extra_independence:
        if inst._pu is None:
            raise MissingPriorError("extra_independence needs P(U)")
        if diagram is None:
            raise CausalBoundsError("extra_independence needs the causal diagram to check W _||_ U")
        if not d_separated(diagram, inst.w_names, inst.u_names, ()):
            raise CausalBoundsError("W and U are not d-separated in the diagram")
        rows, rhs = _independence_rows(inst, prog)
        prog = prog.with_constraints(A_eq=rows, b_eq=rhs)
        notes.append("W and U constrained independent")
    heuristic = inst._pu is None
    seed = independence_seed(inst, fallback=True)
    if heuristic:
        notes.append("no prior: seed splits margins evenly over U")
    rng = np.random.default_rng([cfg.rng_seed, 7])
    mid = (prog.lo + prog.hi) / 2
    if start == "box-midpoint":
        seeds = [mid]
        cfg = cfg.replace(restarts=0)
        notes.append("single start from the box midpoint; not a sound range")
    else:
        seeds = [seed, mid] + consistent_joint_seeds(inst, joint_seeds, rng)
    seed_value = objective(prog, seed, cfg.denominator_floor)
    lo_sol = solve(prog, "min", seeds, cfg)
    hi_sol = solve(prog, "max", seeds, cfg)
    lb = min(max(lo_sol.value, 0.0), 1.0)
    ub = min(max(hi_sol.value, 0.0), 1.0)
    if lb > ub:
        # both solves are seeded with the same points, so this is rounding
        lb = ub = (lb + ub) / 2
    interval = Interval(lb, ub)
    return BoundsResult(interval, (lb + ub) / 2, lo_sol, hi_sol, seed_value, heuristic, notes)


def ensemble_bounds(results: Sequence) -> Interval:
    """Intersect intervals for the same effect: largest lower, smallest upper bound."""
    if not results:
        raise ValueError("need at least one result")
    ivs = [r.interval if isinstance(r, BoundsResult) else r for r in results]
    lb = max(iv.lb for iv in ivs)
    ub = min(iv.ub for iv in ivs)
    if lb > ub:
        raise EmptyIntersectionError(lb, ub)
    return Interval(lb, ub)
