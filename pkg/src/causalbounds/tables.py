"""Exact arithmetic on categorical probability tables.

States are 0-based everywhere, on disk as well as in the Python API. A CPT
stores one row per parent configuration (row-major over the parents in
the order listed) with the child's distribution along the last axis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diagram import CausalDiagram
from .errors import (
    InvalidMassError,
    MissingCptError,
    PositivityError,
    ShapeMismatchError,
    UnknownNodeError,
    ZeroConditionError,
)

__all__ = [
    "Cpt",
    "JointTable",
    "Interval",
    "SAMPLERS",
    "generate_cpts",
    "joint_from_cpts",
    "query_marginal",
    "adjust_backdoor",
    "adjust_frontdoor",
    "tian_pearl_bounds",
    "tian_pearl_from_table",
    "required_sample_size",
    "cpt_to_dict",
    "cpt_from_dict",
    "load_joint",
]

STRUCT_TOL = 1e-12


@dataclass(frozen=True)
class Cpt:
    """P(child | parents) as an array of shape ``parent_states + (child_states,)``."""

    child: str
    parent_names: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        object.__setattr__(self, "parent_names", tuple(self.parent_names))
        object.__setattr__(self, "table", table)
        if table.ndim != len(self.parent_names) + 1:
            raise ShapeMismatchError(
                f"CPT for {self.child!r} has {table.ndim} axes, expected {len(self.parent_names) + 1}"
            )
        if np.any(table < 0) or np.any(table > 1 + STRUCT_TOL):
            raise InvalidMassError(f"CPT for {self.child!r} has entries outside [0, 1]")
        rows = table.sum(axis=-1)
        if np.any(np.abs(rows - 1.0) > STRUCT_TOL):
            raise InvalidMassError(f"CPT rows for {self.child!r} do not sum to 1")

    @property
    def child_states(self) -> int:
        return self.table.shape[-1]

    def row(self, *parent_states: int) -> np.ndarray:
        return self.table[tuple(parent_states)]


@dataclass(frozen=True)
class Interval:
    lb: float
    ub: float

    def __post_init__(self):
        if not (-STRUCT_TOL <= self.lb <= self.ub + STRUCT_TOL and self.ub <= 1 + STRUCT_TOL):
            raise ValueError(f"invalid probability interval [{self.lb}, {self.ub}]")

    @property
    def width(self) -> float:
        return self.ub - self.lb

    @property
    def midpoint(self) -> float:
        return (self.lb + self.ub) / 2

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lb - tol <= value <= self.ub + tol

    def __iter__(self):
        return iter((self.lb, self.ub))


class JointTable:
    """Joint distribution over an ordered scope of categorical variables.

    ``probs`` is stored as an ndarray with one axis per scope variable;
    :attr:`flat` gives the row-major flattening used for serialization.
    """

    __slots__ = ("scope", "probs")

    def __init__(self, scope: Sequence[str], probs, states: Sequence[int] | None = None, check: bool = True):
        scope = tuple(scope)
        arr = np.asarray(probs, dtype=float)
        if states is not None:
            states = tuple(int(s) for s in states)
            if arr.size != math.prod(states):
                raise ShapeMismatchError(f"{arr.size} probabilities for states {states}")
            arr = arr.reshape(states)
        if arr.ndim != len(scope):
            raise ShapeMismatchError(f"table has {arr.ndim} axes for scope {scope}")
        if len(set(scope)) != len(scope):
            raise ValueError(f"repeated variable in scope {scope}")
        if check:
            if np.any(arr < 0):
                raise InvalidMassError("negative probability")
            total = arr.sum()
            if abs(total - 1.0) > STRUCT_TOL * max(1, arr.size ** 0.5):
                raise InvalidMassError(f"table sums to {total!r}, expected 1")
        self.scope = scope
        self.probs = arr

    @property
    def states(self) -> tuple[int, ...]:
        return self.probs.shape

    @property
    def flat(self) -> np.ndarray:
        return self.probs.reshape(-1)

    def axis(self, name: str) -> int:
        try:
            return self.scope.index(name)
        except ValueError:
            raise UnknownNodeError(f"{name!r} not in scope {self.scope}") from None

    def marginal(self, keep: Iterable[str]) -> "JointTable":
        """Marginal over ``keep``, in the order given."""
        keep = list(keep)
        axes = [self.axis(k) for k in keep]
        drop = tuple(i for i in range(len(self.scope)) if i not in axes)
        arr = self.probs.sum(axis=drop) if drop else self.probs
        remaining = [i for i in range(len(self.scope)) if i in axes]
        perm = [remaining.index(a) for a in axes]
        return JointTable(keep, np.transpose(arr, perm), check=False)

    def prob(self, **assignment: int) -> float:
        """P(assignment) with 0-based states, e.g. ``j.prob(X=0, Y=0)``."""
        index = [slice(None)] * len(self.scope)
        for name, state in assignment.items():
            index[self.axis(name)] = state
        return float(self.probs[tuple(index)].sum())

    def reorder(self, scope: Sequence[str]) -> "JointTable":
        if sorted(scope) != sorted(self.scope):
            raise ShapeMismatchError(f"{scope} is not a permutation of {self.scope}")
        return self.marginal(scope)

    def __repr__(self):
        return f"JointTable(scope={self.scope}, states={self.states})"

    def to_dict(self) -> dict:
        return {"scope": list(self.scope), "states": list(self.states), "probs": self.flat.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "JointTable":
        return cls(data["scope"], data["probs"], states=data["states"])


# -- CPT generation --------------------------------------------------------------

SAMPLERS = {
    "uniform": lambda rng, n: rng.uniform(0.0, 1.0, size=n),
    "exponential": lambda rng, n: rng.exponential(1.0, size=n),
    "lognormal": lambda rng, n: rng.lognormal(0.0, 1.0, size=n),
}


def _draw_row(rng, sampler, n):
    while True:
        a = sampler(rng, n)
        total = a.sum()
        if total > 0:
            return a / total


def generate_cpts(G: CausalDiagram, sampler: str = "uniform", seed=0) -> list[Cpt]:
    """Random CPTs for every node of ``G``.

    For each node and each parent configuration, ``states`` positive values
    are drawn from ``sampler`` and divided by their sum. Nodes are visited in
    declaration order and parent configurations in row-major order, so the
    result is a pure function of ``(G, sampler, seed)``. ``seed`` may also be
    a :class:`numpy.random.Generator`.
    """
    try:
        draw = SAMPLERS[sampler]
    except KeyError:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {sorted(SAMPLERS)}") from None
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cpts = []
    for name in G.nodes:
        parents = G.parents(name)
        shape = tuple(G.states(p) for p in parents)
        s = G.states(name)
        rows = [_draw_row(rng, draw, s) for _ in range(math.prod(shape))]
        table = np.array(rows).reshape(shape + (s,))
        cpts.append(Cpt(name, parents, table))
    return cpts


def joint_from_cpts(G: CausalDiagram, cpts: Iterable[Cpt]) -> JointTable:
    """Product of the CPTs over all nodes of ``G`` (scope in declaration order)."""
    by_child = {}
    for cpt in cpts:
        by_child[cpt.child] = cpt
    names = G.nodes
    letters = {n: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i, n in enumerate(names)}
    if len(names) > 52:
        raise ValueError("joint_from_cpts supports at most 52 nodes")
    operands = []
    subscripts = []
    for name in names:
        if name not in by_child:
            raise MissingCptError(f"no CPT for node {name!r}")
        cpt = by_child[name]
        if set(cpt.parent_names) != set(G.parents(name)):
            raise ShapeMismatchError(
                f"CPT parents {cpt.parent_names} of {name!r} differ from diagram parents {G.parents(name)}"
            )
        expected = tuple(G.states(p) for p in cpt.parent_names) + (G.states(name),)
        if cpt.table.shape != expected:
            raise ShapeMismatchError(f"CPT for {name!r} has shape {cpt.table.shape}, expected {expected}")
        operands.append(cpt.table)
        subscripts.append("".join(letters[p] for p in cpt.parent_names) + letters[name])
    out = "".join(letters[n] for n in names)
    probs = np.einsum(",".join(subscripts) + "->" + out, *operands, optimize=True)
    return JointTable(names, probs)


def query_marginal(j: JointTable, keep: Iterable[str], condition: Mapping[str, int] | None = None) -> JointTable:
    """P(keep | condition) as a table over ``keep``.

    ``condition`` maps variable names to 0-based states. Raises
    :class:`ZeroConditionError` when the conditioning event has probability 0.
    """
    keep = list(keep)
    condition = dict(condition or {})
    overlap = set(keep) & set(condition)
    if overlap:
        raise ValueError(f"variables both kept and conditioned on: {sorted(overlap)}")
    if not condition:
        return j.marginal(keep)
    sub = j.marginal(keep + list(condition))
    index = (slice(None),) * len(keep) + tuple(condition[c] for c in condition)
    arr = sub.probs[index]
    mass = arr.sum()
    if mass <= 0:
        raise ZeroConditionError(f"P({condition}) = 0")
    return JointTable(keep, arr / mass, check=False)


def _xyz_array(j: JointTable, treatment: str, outcome: str, Z: Sequence[str]) -> np.ndarray:
    """Joint as an array with axes (X, Y, Z-flattened)."""
    Z = list(Z)
    sub = j.marginal([treatment, outcome] + Z)
    nx, ny = sub.states[:2]
    return sub.probs.reshape(nx, ny, -1)


def adjust_backdoor(j: JointTable, x: int, y: int, Z: Sequence[str], treatment: str = "X", outcome: str = "Y") -> float:
    """sum_z P(y | x, z) P(z).

    Strata with P(z) = 0 contribute nothing; a stratum with P(z) > 0 but
    P(x, z) = 0 raises :class:`PositivityError`.
    """
    p = _xyz_array(j, treatment, outcome, Z)
    pz = p.sum(axis=(0, 1))
    pxz = p[x].sum(axis=0)
    pxyz = p[x, y]
    live = pz > 0
    if np.any(live & (pxz <= 0)):
        raise PositivityError(f"P({treatment}={x}, z) = 0 for a stratum with P(z) > 0")
    return float(np.sum(pxyz[live] / pxz[live] * pz[live]))


def adjust_frontdoor(j: JointTable, x: int, y: int, Z: Sequence[str], treatment: str = "X", outcome: str = "Y") -> float:
    """sum_z P(z | x) sum_x' P(y | x', z) P(x').

    Requires P(x', z) > 0 for every x' and every z that carries mass.
    """
    p = _xyz_array(j, treatment, outcome, Z)
    px = p.sum(axis=(1, 2))
    if px[x] <= 0:
        raise PositivityError(f"P({treatment}={x}) = 0")
    pxz = p.sum(axis=1)  # (X, Z)
    pz_given_x = pxz[x] / px[x]
    live = pz_given_x > 0
    if np.any(pxz[:, live] <= 0):
        raise PositivityError("P(x', z) = 0 for some x' and a stratum z reachable under x")
    inner = (p[:, y, :][:, live] / pxz[:, live] * px[:, None]).sum(axis=0)
    return float(np.sum(pz_given_x[live] * inner))


def tian_pearl_bounds(pxy: float, pxy_prime: float) -> Interval:
    """[P(x, y), 1 - P(x, y')]."""
    if pxy < -STRUCT_TOL or pxy_prime < -STRUCT_TOL or pxy + pxy_prime > 1 + STRUCT_TOL:
        raise InvalidMassError(f"P(x,y)={pxy} and P(x,y')={pxy_prime} are not joint masses")
    lb = min(max(pxy, 0.0), 1.0)
    ub = min(max(1.0 - pxy_prime, lb), 1.0)
    return Interval(lb, ub)


def tian_pearl_from_table(j: JointTable, x: int, y: int, treatment: str = "X", outcome: str = "Y") -> Interval:
    """Tian-Pearl interval with P(x,y') summed over every outcome state other than y."""
    pxy = j.marginal([treatment, outcome]).probs
    return tian_pearl_bounds(float(pxy[x, y]), float(pxy[x].sum() - pxy[x, y]))


def required_sample_size(state_counts_per_table: Iterable[Sequence[int] | int], per_state: int = 30) -> int:
    """Samples needed so that every cell of every table gets ``per_state`` draws."""
    sizes = []
    for counts in state_counts_per_table:
        if isinstance(counts, (int, np.integer)):
            counts = [counts]
        sizes.append(math.prod(int(c) for c in counts))
    if not sizes:
        raise ValueError("need at least one table")
    return max(sizes) * int(per_state)


# -- JSON ------------------------------------------------------------------------

def cpt_to_dict(cpt: Cpt) -> dict:
    rows = cpt.table.reshape(-1, cpt.child_states)
    return {"node": cpt.child, "parents": list(cpt.parent_names), "table": rows.tolist()}


def cpt_from_dict(data: Mapping, G: CausalDiagram) -> Cpt:
    child = data["node"]
    parents = tuple(data.get("parents", G.parents(child)))
    shape = tuple(G.states(p) for p in parents) + (G.states(child),)
    table = np.asarray(data["table"], dtype=float)
    if table.size != math.prod(shape):
        raise ShapeMismatchError(f"CPT for {child!r} has {table.size} entries, expected {math.prod(shape)}")
    return Cpt(child, parents, table.reshape(shape))


def load_joint(path) -> JointTable:
    with open(path) as fh:
        return JointTable.from_dict(json.load(fh))
