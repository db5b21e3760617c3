"""Local optimization of sum-of-ratios objectives over polytopes.

The programs handled here have the form::

    min / max   sum_t coef_t * prod(x[num_t]) / prod(x[den_t])
    subject to  A_eq x = b_eq,  A_in x <= b_in,  lo <= x <= hi

Every constraint is linear, so the hard part is the nonconvex objective.
:func:`solve` splits the program into independent blocks (connected
components of the variable-coupling graph), then runs a sequential
quadratic programming method (scipy's SLSQP, which uses an L1 merit line
search) from many feasible starting points per block: caller seeds plus
hit-and-run samples of the polytope. Each local result is projected onto
its active face so that the returned point satisfies the constraints to
rounding error, which keeps ratio terms with vanishing denominators from
feeding on constraint slack.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import InfeasibleError, NonconvergenceError

__all__ = [
    "RatioTerm",
    "FractionalProgram",
    "SolverConfig",
    "Solution",
    "solve",
    "check_feasibility",
    "objective",
    "gradient",
    "hit_and_run",
]

MIN, MAX = "min", "max"


@dataclass(frozen=True)
class RatioTerm:
    """``coef * prod(x[num]) / prod(x[den])``; an empty ``den`` means 1."""

    coef: float
    num: tuple[int, ...]
    den: tuple[int, ...] = ()


@dataclass
class FractionalProgram:
    var_count: int
    terms: list[RatioTerm]
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_in: np.ndarray
    b_in: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        n = int(self.var_count)
        self.var_count = n
        self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
        self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        self.A_in = np.asarray(self.A_in, dtype=float).reshape(-1, n)
        self.b_in = np.asarray(self.b_in, dtype=float).reshape(-1)
        self.lo = np.asarray(self.lo, dtype=float).reshape(n)
        self.hi = np.asarray(self.hi, dtype=float).reshape(n)
        self.terms = [t if isinstance(t, RatioTerm) else RatioTerm(*t) for t in self.terms]
        if self.A_eq.shape[0] != self.b_eq.size or self.A_in.shape[0] != self.b_in.size:
            raise ValueError("constraint matrix and right-hand side lengths differ")
        if np.any(self.lo > self.hi):
            bad = int(np.argmax(self.lo > self.hi))
            raise InfeasibleError(f"box for variable {bad} is empty: [{self.lo[bad]}, {self.hi[bad]}]")
        if np.any(self.lo < 0) or np.any(self.hi > 1):
            raise ValueError("box bounds must lie in [0, 1]")
        for t in self.terms:
            for i in t.num + t.den:
                if not 0 <= i < n:
                    raise IndexError(f"term references variable {i} outside 0..{n - 1}")
        self._compile()

    def _compile(self):
        k = max([len(t.num) for t in self.terms] + [len(t.den) for t in self.terms] + [1])
        pad = self.var_count  # points at an appended constant 1.0
        num = np.full((len(self.terms), k), pad, dtype=int)
        den = np.full((len(self.terms), k), pad, dtype=int)
        for r, t in enumerate(self.terms):
            num[r, : len(t.num)] = t.num
            den[r, : len(t.den)] = t.den
        self._num = num
        self._den = den
        self._has_den = np.array([len(t.den) > 0 for t in self.terms], dtype=bool)
        self._coef = np.array([t.coef for t in self.terms], dtype=float)

    def with_constraints(self, A_eq=None, b_eq=None, A_in=None, b_in=None) -> "FractionalProgram":
        """Copy of the program with extra rows appended."""
        A_eq_new, b_eq_new = self.A_eq, self.b_eq
        if A_eq is not None:
            A_eq_new = np.vstack([self.A_eq, np.atleast_2d(A_eq)])
            b_eq_new = np.concatenate([self.b_eq, np.atleast_1d(b_eq)])
        A_in_new, b_in_new = self.A_in, self.b_in
        if A_in is not None:
            A_in_new = np.vstack([self.A_in, np.atleast_2d(A_in)])
            b_in_new = np.concatenate([self.b_in, np.atleast_1d(b_in)])
        return FractionalProgram(
            self.var_count, list(self.terms), A_eq_new, b_eq_new, A_in_new, b_in_new,
            self.lo.copy(), self.hi.copy(), self.names,
        )

    def subprogram(self, idx: np.ndarray) -> "FractionalProgram":
        """Restriction to the variables ``idx`` (which must form a union of blocks)."""
        idx = np.asarray(idx, dtype=int)
        pos = -np.ones(self.var_count, dtype=int)
        pos[idx] = np.arange(idx.size)
        inside = np.zeros(self.var_count, dtype=bool)
        inside[idx] = True

        def rows(A):
            nz = A != 0
            keep = nz[:, idx].any(axis=1)
            if np.any(nz[keep][:, ~inside]):
                raise ValueError("constraint couples variables across the requested split")
            return keep

        keep_eq, keep_in = rows(self.A_eq), rows(self.A_in)
        terms = []
        for t in self.terms:
            vs = t.num + t.den
            if vs and inside[list(vs)].all():
                terms.append(RatioTerm(t.coef, tuple(pos[list(t.num)]), tuple(pos[list(t.den)])))
            elif vs and inside[list(vs)].any():
                raise ValueError("objective term couples variables across the requested split")
        names = [self.names[i] for i in idx] if self.names else None
        return FractionalProgram(
            idx.size, terms,
            self.A_eq[keep_eq][:, idx], self.b_eq[keep_eq],
            self.A_in[keep_in][:, idx], self.b_in[keep_in],
            self.lo[idx], self.hi[idx], names,
        )

    def blocks(self) -> list[np.ndarray]:
        """Connected components of the graph linking variables that share a term or constraint row."""
        parent = list(range(self.var_count))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        def link(vs):
            vs = list(vs)
            for v in vs[1:]:
                a, b = find(vs[0]), find(v)
                if a != b:
                    parent[max(a, b)] = min(a, b)

        for t in self.terms:
            link(t.num + t.den)
        for A in (self.A_eq, self.A_in):
            for row in A:
                link(np.flatnonzero(row))
        groups: dict[int, list[int]] = {}
        for i in range(self.var_count):
            groups.setdefault(find(i), []).append(i)
        return [np.array(g, dtype=int) for g in sorted(groups.values(), key=lambda g: g[0])]

    def to_dict(self) -> dict:
        return {
            "var_count": self.var_count,
            "terms": [[t.coef, list(t.num), list(t.den)] for t in self.terms],
            "eq": [[row.tolist(), float(b)] for row, b in zip(self.A_eq, self.b_eq)],
            "ineq": [[row.tolist(), float(b)] for row, b in zip(self.A_in, self.b_in)],
            "box": [[float(a), float(b)] for a, b in zip(self.lo, self.hi)],
            "names": self.names,
        }


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve`.

    ``denominator_floor`` is the floor used when reporting objective values;
    ``search_floor`` is the (larger) one used while iterating, so that slack
    at the level of the QP solver's accuracy cannot inflate a ratio.
    """

    restarts: int = 20
    max_iterations: int = 200
    constraint_tol: float = 1e-8
    step_tol: float = 1e-9
    denominator_floor: float = 1e-12
    search_floor: float = 1e-9
    rng_seed: int = 0
    n_jobs: int = 1
    hit_and_run_thinning: int = 0  # 0 means 2 * dimension

    def __post_init__(self):
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("constraint_tol", "step_tol", "denominator_floor", "search_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def replace(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class Solution:
    point: np.ndarray
    value: float
    feasible: bool
    kkt_residual: float
    restarts_used: int
    max_violation: float = 0.0
    local_solves: int = 0
    failed_solves: int = 0
    blocks: int = 1
    direction: str = MIN

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "feasible": self.feasible,
            "kkt_residual": self.kkt_residual,
            "restarts_used": self.restarts_used,
            "max_violation": self.max_violation,
            "local_solves": self.local_solves,
            "failed_solves": self.failed_solves,
            "blocks": self.blocks,
            "direction": self.direction,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- objective -------------------------------------------------------------------

def _parts(p: FractionalProgram, x: np.ndarray):
    xe = np.append(np.asarray(x, dtype=float), 1.0)
    nv = xe[p._num]
    dv = xe[p._den]
    return xe, nv, dv, nv.prod(axis=1), np.where(p._has_den, dv.prod(axis=1), 1.0)


def objective(p: FractionalProgram, x, floor: float = 1e-12) -> float:
    """Sum of ratio terms; a term whose numerator and denominator are both
    at most ``floor`` counts as 0, otherwise it is ``N / (D + floor)``."""
    if not p.terms:
        return 0.0
    _, _, _, N, D = _parts(p, x)
    Dp = np.where(p._has_den, D + floor, 1.0)
    vanish = p._has_den & (np.abs(N) <= floor) & (D <= floor)
    vals = np.where(vanish, 0.0, N / Dp)
    return float(p._coef @ vals)


def gradient(p: FractionalProgram, x, floor: float = 1e-12) -> np.ndarray:
    """Analytic gradient of :func:`objective` away from the vanishing set."""
    n = p.var_count
    g = np.zeros(n + 1)
    if not p.terms:
        return g[:n]
    _, nv, dv, N, D = _parts(p, x)
    Dp = np.where(p._has_den, D + floor, 1.0)
    k = nv.shape[1]
    for j in range(k):
        others = np.prod(np.delete(nv, j, axis=1), axis=1) if k > 1 else np.ones(len(N))
        np.add.at(g, p._num[:, j], p._coef * others / Dp)
        dothers = np.prod(np.delete(dv, j, axis=1), axis=1) if k > 1 else np.ones(len(N))
        contrib = np.where(p._has_den, -p._coef * N * dothers / Dp**2, 0.0)
        np.add.at(g, p._den[:, j], contrib)
    return g[:n]


# -- feasibility -----------------------------------------------------------------

def _violation(p: FractionalProgram, x) -> float:
    x = np.asarray(x, dtype=float)
    v = [0.0, float(np.max(p.lo - x, initial=0.0)), float(np.max(x - p.hi, initial=0.0))]
    if p.A_eq.size:
        v.append(float(np.max(np.abs(p.A_eq @ x - p.b_eq))))
    if p.A_in.size:
        v.append(float(np.max(p.A_in @ x - p.b_in, initial=0.0)))
    return max(v)


def check_feasibility(p: FractionalProgram, x, tol: float = 1e-8) -> tuple[bool, float]:
    """``(ok, max_violation)`` for equalities, inequalities and box bounds."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.var_count,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.var_count},)")
    v = _violation(p, x)
    return v <= tol, v


def _polish(p: FractionalProgram, x, act_tol: float = 1e-7, rounds: int = 12):
    """Project ``x`` onto the face of constraints active within ``act_tol``.

    Returns ``(point, max_violation)``. Variables at a bound are pinned to
    it; the remaining ones get the least-norm correction that satisfies the
    equalities and the active inequalities exactly.
    """
    x = np.clip(np.asarray(x, dtype=float), p.lo, p.hi)
    best = (x, _violation(p, x))
    tol = act_tol
    for _ in range(rounds):
        at_lo = x <= p.lo + tol
        at_hi = (x >= p.hi - tol) & ~at_lo
        xf = np.where(at_lo, p.lo, np.where(at_hi, p.hi, x))
        free = ~(at_lo | at_hi)
        act = (p.A_in @ xf - p.b_in) > -tol if p.A_in.size else np.zeros(0, dtype=bool)
        M = np.vstack([p.A_eq, p.A_in[act]])
        r = np.concatenate([p.b_eq, p.b_in[act]]) - M @ xf
        d = np.zeros_like(x)
        if free.any() and M.shape[0]:
            d[free] = np.linalg.lstsq(M[:, free], r, rcond=None)[0]
        x = xf + d
        v = _violation(p, x)
        if v < best[1]:
            best = (x, v)
        if v <= 1e-15:
            break
        if np.any(x < p.lo - 1e-15) or np.any(x > p.hi + 1e-15):
            x = np.clip(x, p.lo, p.hi)
        tol *= 2
    return best


# -- polytope sampling -----------------------------------------------------------

@dataclass
class _Polytope:
    """``{x0 + N t : G (x0 + N t) <= h}`` with ``G``/``h`` stacking inequalities and box."""

    N: np.ndarray
    x0: np.ndarray
    G: np.ndarray
    h: np.ndarray
    center: np.ndarray | None = None
    radius: float = 0.0


def _polytope(p: FractionalProgram) -> _Polytope:
    n = p.var_count
    G = np.vstack([p.A_in, np.eye(n), -np.eye(n)])
    h = np.concatenate([p.b_in, p.hi, -p.lo])
    if p.A_eq.size:
        N = scipy.linalg.null_space(p.A_eq)
        x0 = np.linalg.lstsq(p.A_eq, p.b_eq, rcond=None)[0]
    else:
        N = np.eye(n)
        x0 = np.zeros(n)
    poly = _Polytope(N, x0, G, h)
    k = N.shape[1]
    if k == 0:
        poly.center = x0
        return poly
    Gt = G @ N
    ht = h - G @ x0
    norms = np.linalg.norm(Gt, axis=1)
    # rows with no component in the subspace only constrain x0
    res = scipy.optimize.linprog(
        np.r_[np.zeros(k), -1.0],
        A_ub=np.hstack([Gt, norms[:, None]]),
        b_ub=ht,
        bounds=[(None, None)] * k + [(0, None)],
        method="highs",
    )
    if res.status == 0:
        poly.center = x0 + N @ res.x[:k]
        poly.radius = float(res.x[k])
    return poly


def hit_and_run(p: FractionalProgram, count: int, rng: np.random.Generator, start=None, thinning: int = 0,
                poly: _Polytope | None = None) -> np.ndarray:
    """``count`` points of the polytope of ``p`` from a hit-and-run chain.

    The chain starts at ``start`` (default: the Chebyshev center) and takes
    ``thinning`` steps (default ``2 * dimension``) between returned points.
    """
    poly = poly or _polytope(p)
    if start is None:
        if poly.center is None:
            raise InfeasibleError("polytope is empty")
        start = poly.center
    x = np.asarray(start, dtype=float).copy()
    k = poly.N.shape[1]
    out = np.empty((count, p.var_count))
    if k == 0:
        out[:] = x
        return out
    steps = thinning or 2 * k
    for i in range(count):
        for _ in range(steps):
            d = poly.N @ rng.standard_normal(k)
            nd = np.linalg.norm(d)
            if nd == 0:
                continue
            d /= nd
            Gd = poly.G @ d
            slack = np.maximum(poly.h - poly.G @ x, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = slack / Gd
            pos = Gd > 1e-14
            neg = Gd < -1e-14
            tmax = ratio[pos].min(initial=np.inf)
            tmin = ratio[neg].max(initial=-np.inf)
            if not np.isfinite(tmax) or not np.isfinite(tmin) or tmax <= tmin:
                continue
            x = x + rng.uniform(tmin, tmax) * d
        out[i] = x
    return out


# -- local solver ----------------------------------------------------------------

def _kkt_residual(p: FractionalProgram, x, sign: float, floor: float, tol: float = 1e-7,
                  degenerate: float = 1e-9) -> float:
    """Stationarity residual of the KKT system at ``x``.

    Terms whose denominator is at most ``degenerate`` are left out: the
    objective is not differentiable on that face, and the optimum of these
    programs often sits there.
    """
    if p.terms:
        _, _, _, _, D = _parts(p, x)
        keep = ~(p._has_den & (D <= degenerate))
        if not np.all(keep):
            p = FractionalProgram(p.var_count, [t for t, k in zip(p.terms, keep) if k],
                                  p.A_eq, p.b_eq, p.A_in, p.b_in, p.lo, p.hi)
    g = sign * gradient(p, x, floor)
    cols = []
    bounds_lo = []
    for row in p.A_eq:
        cols.append(row)
        bounds_lo.append(-np.inf)
    if p.A_in.size:
        slack = p.A_in @ x - p.b_in
        for row in p.A_in[slack > -tol]:
            cols.append(row)
            bounds_lo.append(0.0)
    for i in np.flatnonzero(x <= p.lo + tol):
        e = np.zeros(p.var_count)
        e[i] = -1.0
        cols.append(e)
        bounds_lo.append(0.0)
    for i in np.flatnonzero(x >= p.hi - tol):
        e = np.zeros(p.var_count)
        e[i] = 1.0
        cols.append(e)
        bounds_lo.append(0.0)
    if not cols:
        return float(np.max(np.abs(g), initial=0.0))
    J = np.array(cols).T
    lb = np.array(bounds_lo)
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        res = scipy.optimize.lsq_linear(J, -g, bounds=(lb, np.full(lb.size, np.inf)))
    return float(np.max(np.abs(J @ res.x + g), initial=0.0))


def _project(p: FractionalProgram, y, x_feasible):
    """Euclidean projection of ``y`` onto the polytope (convex QP)."""
    cons = []
    if p.A_eq.size:
        cons.append({"type": "eq", "fun": lambda v: p.A_eq @ v - p.b_eq, "jac": lambda v: p.A_eq})
    if p.A_in.size:
        cons.append({"type": "ineq", "fun": lambda v: p.b_in - p.A_in @ v, "jac": lambda v: -p.A_in})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = scipy.optimize.minimize(
            lambda v: 0.5 * np.sum((v - y) ** 2), x_feasible, jac=lambda v: v - y,
            method="SLSQP", bounds=list(zip(p.lo, p.hi)), constraints=cons,
            options={"maxiter": 200, "ftol": 1e-14},
        )
    return _polish(p, res.x)


def _projected_gradient(p: FractionalProgram, x, sign: float, cfg: SolverConfig, iters: int = 40):
    """Fallback when SLSQP breaks down: projected gradient with Armijo backtracking."""
    f = lambda v: sign * objective(p, v, cfg.search_floor)
    fx = f(x)
    step = 1.0
    for _ in range(iters):
        g = sign * gradient(p, x, cfg.search_floor)
        gn = np.linalg.norm(g)
        if gn == 0 or not np.isfinite(gn):
            break
        improved = False
        t = step / gn
        for _ in range(30):
            y, v = _project(p, x - t * g, x)
            if v <= cfg.constraint_tol and f(y) <= fx - 1e-4 * np.dot(g, x - y):
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        if np.linalg.norm(y - x) <= cfg.step_tol:
            x, fx = y, f(y)
            break
        x, fx = y, f(y)
    return x


def _local_solve(p: FractionalProgram, x0, sign: float, cfg: SolverConfig):
    """One SLSQP run followed by face projection. Returns ``(point, ok, failed)``."""
    fs = cfg.search_floor
    cons = []
    if p.A_eq.size:
        cons.append({"type": "eq", "fun": lambda v: p.A_eq @ v - p.b_eq, "jac": lambda v: p.A_eq})
    if p.A_in.size:
        cons.append({"type": "ineq", "fun": lambda v: p.b_in - p.A_in @ v, "jac": lambda v: -p.A_in})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with np.errstate(all="ignore"):
            res = scipy.optimize.minimize(
                lambda v: sign * objective(p, v, fs),
                np.clip(x0, p.lo, p.hi),
                jac=lambda v: sign * gradient(p, v, fs),
                method="SLSQP",
                bounds=list(zip(p.lo, p.hi)),
                constraints=cons,
                options={"maxiter": cfg.max_iterations, "ftol": cfg.step_tol},
            )
    x, v = _polish(p, res.x)
    failed = not res.success or not np.all(np.isfinite(res.x))
    if failed:
        # QP subproblem degenerated or line search stalled
        start, v0 = _polish(p, x0)
        base = x if v <= cfg.constraint_tol else start
        if _violation(p, base) <= cfg.constraint_tol:
            x = _projected_gradient(p, base, sign, cfg)
            x, v = _polish(p, x)
    return x, v <= cfg.constraint_tol, failed


def _better(cand, best, sign):
    """Deterministic ordering: objective value first, then the point lexicographically."""
    if best is None:
        return True
    vc, xc = cand
    vb, xb = best
    if sign * vc < sign * vb:
        return True
    if vc == vb:
        return tuple(xc) < tuple(xb)
    return False


def _solve_block(p: FractionalProgram, sign: float, seeds: list, cfg: SolverConfig, rng_seed):
    rng = np.random.default_rng(rng_seed)
    n = p.var_count
    if not p.terms:
        # no objective: any feasible point will do
        starts = [s for s in seeds if _violation(p, s) <= cfg.constraint_tol]
        if starts:
            x = starts[0]
        else:
            poly = _polytope(p)
            if poly.center is None:
                raise InfeasibleError("constraints admit no feasible point")
            x, _ = _polish(p, poly.center)
        return x, 0.0, 0, 0, 0, 0.0

    candidates = []
    starts = []
    for s in seeds:
        s = np.asarray(s, dtype=float)
        xs, v = _polish(p, s)
        if v <= cfg.constraint_tol:
            candidates.append(xs)
        starts.append(s)

    poly = None
    if cfg.restarts > 0 or not starts:
        poly = _polytope(p)
        if poly.center is None and not candidates:
            raise InfeasibleError("constraints admit no feasible point")
        if poly.center is not None:
            chain_start = poly.center
            starts.extend(hit_and_run(p, max(cfg.restarts, 1 if not starts else 0), rng,
                                      start=chain_start, thinning=cfg.hit_and_run_thinning, poly=poly))

    solves = failures = 0
    for x0 in starts:
        x, ok, failed = _local_solve(p, x0, sign, cfg)
        solves += 1
        failures += failed
        if ok:
            candidates.append(x)
    if not candidates:
        raise NonconvergenceError("no start produced a feasible point")

    best = None
    for x in candidates:
        val = objective(p, x, cfg.denominator_floor)
        if _better((val, x), best, sign):
            best = (val, x)
    kkt = _kkt_residual(p, best[1], sign, cfg.denominator_floor, degenerate=cfg.search_floor)
    return best[1], best[0], len(starts), solves, failures, kkt


def solve(p: FractionalProgram, direction: str = MIN, seeds: Sequence = (), cfg: SolverConfig | None = None) -> Solution:
    """Best local optimum of ``p`` over all starts.

    Parameters
    ----------
    p : FractionalProgram
    direction : {"min", "max"}
    seeds : sequence of arrays
        Starting points inside the box (ideally feasible). Feasible seeds are
        also candidates themselves, so for ``"min"`` the returned value never
        exceeds the best seed value (dually for ``"max"``).
    cfg : SolverConfig
        ``cfg.restarts`` hit-and-run points are added per independent block.

    Raises
    ------
    InfeasibleError
        When the polytope is empty.
    NonconvergenceError
        When no start yields a feasible point; ``exc.solution`` holds the
        best-effort point flagged infeasible.
    """
    cfg = cfg or SolverConfig()
    direction = direction.lower()
    if direction not in (MIN, MAX):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    sign = 1.0 if direction == MIN else -1.0
    seeds = [np.asarray(s, dtype=float).reshape(p.var_count) for s in seeds]

    blocks = p.blocks()
    subs = [p.subprogram(b) if len(blocks) > 1 else p for b in blocks]
    jobs = [(sub, [s[b] for s in seeds], (cfg.rng_seed, bi)) for bi, (sub, b) in enumerate(zip(subs, blocks))]

    def run(job):
        sub, sseeds, key = job
        return _solve_block(sub, sign, sseeds, cfg, key)

    try:
        if cfg.n_jobs > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(job) for job in jobs]
    except NonconvergenceError as exc:
        fallback = seeds[0] if seeds else np.clip(np.zeros(p.var_count), p.lo, p.hi)
        exc.solution = Solution(fallback, objective(p, fallback, cfg.denominator_floor), False,
                                float("nan"), 0, _violation(p, fallback), direction=direction)
        raise

    x = np.empty(p.var_count)
    used = solves = failures = 0
    kkt = 0.0
    # the KKT system is block diagonal, so the residual is the worst block's
    for b, (xb, _, n_starts, n_solves, n_fail, k) in zip(blocks, results):
        x[b] = xb
        used = max(used, n_starts)
        solves += n_solves
        failures += n_fail
        kkt = max(kkt, k)
    value = objective(p, x, cfg.denominator_floor)
    viol = _violation(p, x)
    return Solution(
        point=x,
        value=value,
        feasible=viol <= cfg.constraint_tol,
        kkt_residual=kkt,
        restarts_used=used,
        max_violation=viol,
        local_solves=solves,
        failed_solves=failures,
        blocks=len(blocks),
        direction=direction,
    )
