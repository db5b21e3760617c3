"""Factor a high-dimensional adjustment variable into two smaller ones.

A variable Z with ``m`` states is replaced by a pair (W, U) with ``p`` and
``q = ceil(m / p)`` states whose Cartesian product enumerates the states of
Z, padded at the tail with zero-probability virtual states when ``p`` does
not divide ``m``. In the new diagram U inherits the parents of Z, W inherits
them as well plus U itself, and every child of Z becomes a child of both.
Causal effects of X on Y are unchanged, so W can then be treated as the
observed part and U as the latent part of a bounding problem.

Two labelings of the product are supported. ``"w_major"`` pairs
``(w_j, u_k)`` with ``z[j * q + k]`` (0-based), ``"u_major"`` pairs it with
``z[k * p + j]``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diagram import CausalDiagram, build_diagram, satisfies_backdoor, satisfies_frontdoor
from .errors import CriterionError, ScaleError, ShapeMismatchError, UnknownNodeError
from .tables import Cpt, JointTable, adjust_backdoor, adjust_frontdoor, joint_from_cpts, required_sample_size

__all__ = [
    "StateMapping",
    "EquivalentTuple",
    "EquivalenceReport",
    "make_equivalent_tuple",
    "make_equivalent_tuple_multi",
    "project_observables",
    "verify_equivalence",
    "equivalent_cpts",
    "find_adjustment_set",
    "suggest_p",
]

ORDERS = ("w_major", "u_major")
EXACT_CELL_LIMIT = 2 ** 12
# exhaustive search over candidate sets stops being cheap past this many nodes
_SEARCH_LIMIT = 14


@dataclass(frozen=True)
class StateMapping:
    """Bijection between the states of Z and the pairs (w, u).

    Parameters
    ----------
    z_name : str
    m : int
        Number of states of Z.
    p : int
        Number of states of W.
    q : int
        Number of states of U; ``p * q >= m``.
    order : {"w_major", "u_major"}
    w_name, u_name : str
        Names of the replacement nodes.
    """

    z_name: str
    m: int
    p: int
    q: int
    order: str = "w_major"
    w_name: str = "W"
    u_name: str = "U"

    def __post_init__(self):
        if self.m < 1 or self.p < 1 or self.q < 1:
            raise ValueError("state counts must be positive")
        if self.p * self.q < self.m:
            raise ValueError(f"p*q = {self.p * self.q} cannot cover m = {self.m} states")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.w_name == self.u_name:
            raise ValueError("W and U need distinct names")

    @classmethod
    def for_states(cls, z_name: str, m: int, p: int, **kw) -> "StateMapping":
        """Mapping with ``q = ceil(m / p)``."""
        if not 1 <= p <= m:
            raise ValueError(f"p must lie in 1..{m}, got {p}")
        return cls(z_name, m, p, -(-m // p), **kw)

    @property
    def padded(self) -> bool:
        return self.p * self.q != self.m

    @property
    def virtual_states(self) -> int:
        return self.p * self.q - self.m

    def z_index(self, j: int, k: int) -> int:
        """0-based Z index for ``(w_j, u_k)``; values ``>= m`` are virtual."""
        if not (0 <= j < self.p and 0 <= k < self.q):
            raise IndexError(f"(w={j}, u={k}) outside {self.p}x{self.q}")
        return j * self.q + k if self.order == "w_major" else k * self.p + j

    def wu_index(self, z: int) -> tuple[int, int]:
        if not 0 <= z < self.p * self.q:
            raise IndexError(f"z={z} outside 0..{self.p * self.q - 1}")
        if self.order == "w_major":
            return divmod(z, self.q)
        k, j = divmod(z, self.p)
        return j, k

    def index_grid(self) -> np.ndarray:
        """``grid[j, k]`` is the Z index of ``(w_j, u_k)``."""
        j, k = np.indices((self.p, self.q))
        return j * self.q + k if self.order == "w_major" else k * self.p + j

    def swapped(self) -> "StateMapping":
        """Same bijection with the labeling order flipped."""
        other = "u_major" if self.order == "w_major" else "w_major"
        return StateMapping(self.z_name, self.m, self.p, self.q, other, self.w_name, self.u_name)

    def w_members(self, j: int) -> list[int]:
        """Real Z states making up ``w_j``."""
        return [z for z in (self.z_index(j, k) for k in range(self.q)) if z < self.m]

    def u_members(self, k: int) -> list[int]:
        return [z for z in (self.z_index(j, k) for j in range(self.p)) if z < self.m]

    def to_dict(self) -> dict:
        return {
            "z_name": self.z_name, "m": self.m, "p": self.p, "q": self.q,
            "order": self.order, "w_name": self.w_name, "u_name": self.u_name,
            "padded": self.padded,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StateMapping":
        keys = ("z_name", "m", "p", "q", "order", "w_name", "u_name")
        return cls(**{k: data[k] for k in keys if k in data})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class EquivalentTuple:
    """Transformed diagram and data.

    Attributes
    ----------
    g_prime : CausalDiagram
    mapping : StateMapping
    projected : (JointTable, JointTable)
        ``P(X, Y, W)`` and ``P(U)``.
    joint : JointTable
        Full joint over the nodes of ``g_prime``.
    criterion : {"backdoor", "frontdoor"}
    adjustment : tuple of str
        Adjustment set in the original diagram (contains Z).
    adjustment_prime : tuple of str
        Same set with Z replaced by W and U.
    """

    g_prime: CausalDiagram
    mapping: StateMapping
    projected: tuple
    joint: JointTable
    criterion: str
    adjustment: tuple
    adjustment_prime: tuple
    treatment: str = "X"
    outcome: str = "Y"

    @property
    def pxyw(self) -> JointTable:
        return self.projected[0]

    @property
    def pu(self) -> JointTable:
        return self.projected[1]


@dataclass(frozen=True)
class EquivalenceReport:
    effect_original: float
    effect_equivalent: float
    criterion: str
    tolerance: float = 1e-12
    difference: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        diff = abs(self.effect_original - self.effect_equivalent)
        object.__setattr__(self, "difference", diff)
        object.__setattr__(self, "passed", diff <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "effect_original": self.effect_original, "effect_equivalent": self.effect_equivalent,
            "difference": self.difference, "passed": self.passed, "criterion": self.criterion,
        }


# -- criterion search --------------------------------------------------------------

def find_adjustment_set(G: CausalDiagram, x: str, y: str, must_contain: Iterable[str] = ()):
    """First ``(criterion, set)`` containing ``must_contain`` that satisfies
    the back-door or front-door criterion for ``(x, y)``, or ``None``.

    Smaller sets are tried first and back-door before front-door. Diagrams
    with many nodes only get a handful of canonical candidates.
    """
    base = set(must_contain)
    others = [n for n in G.nodes if n not in base and n not in (x, y)]
    if len(others) <= _SEARCH_LIMIT:
        candidates = (
            base | set(extra)
            for size in range(len(others) + 1)
            for extra in itertools.combinations(others, size)
        )
    else:
        desc = G.descendants([x])
        nondesc = {n for n in others if n not in desc}
        candidates = iter([base, base | (set(G.parents(x)) - {y}), base | nondesc])
    for cand in candidates:
        if x in cand or y in cand:
            continue
        if satisfies_backdoor(G, cand, x, y):
            return "backdoor", tuple(n for n in G.nodes if n in cand)
        if satisfies_frontdoor(G, cand, x, y):
            return "frontdoor", tuple(n for n in G.nodes if n in cand)
    return None


def _rewire(G: CausalDiagram, z: str, mapping: StateMapping) -> CausalDiagram:
    w, u = mapping.w_name, mapping.u_name
    for name in (w, u):
        if name in G and name != z:
            raise ValueError(f"node name {name!r} already used in the diagram")
    nodes = []
    for n in G.nodes:
        if n == z:
            nodes += [(u, mapping.q), (w, mapping.p)]
        else:
            nodes.append((n, G.states(n)))
    edges = []
    for a, b in G.edges:
        if b == z:
            edges += [(a, u), (a, w)]
        elif a == z:
            edges += [(w, b), (u, b)]
        else:
            edges.append((a, b))
    edges.append((u, w))
    return build_diagram(nodes, edges)


def _expand_axis(joint: JointTable, mapping: StateMapping) -> JointTable:
    """Replace the Z axis of ``joint`` by (U, W) axes."""
    ax = joint.axis(mapping.z_name)
    if joint.states[ax] != mapping.m:
        raise ShapeMismatchError(f"{mapping.z_name} has {joint.states[ax]} states in the table, mapping says {mapping.m}")
    arr = np.moveaxis(joint.probs, ax, -1)
    pad = np.zeros(arr.shape[:-1] + (mapping.virtual_states,))
    arr = np.concatenate([arr, pad], axis=-1)
    arr = arr[..., mapping.index_grid().T]  # trailing axes (U, W)
    arr = np.moveaxis(arr, [-2, -1], [ax, ax + 1])
    scope = list(joint.scope)
    scope[ax:ax + 1] = [mapping.u_name, mapping.w_name]
    return JointTable(scope, arr, check=False)


def project_observables(joint: JointTable, mapping: StateMapping, treatment: str = "X", outcome: str = "Y"):
    """``(P(X, Y, W), P(U))`` from a table containing X, Y and Z.

    Virtual states contribute nothing. Raises :class:`ShapeMismatchError`
    when Z is missing from the table or has the wrong number of states.
    """
    if mapping.z_name not in joint.scope:
        raise ShapeMismatchError(f"{mapping.z_name!r} not in table scope {joint.scope}")
    sub = joint.marginal([treatment, outcome, mapping.z_name])
    full = _expand_axis(sub, mapping)
    pxyw = full.marginal([treatment, outcome, mapping.w_name])
    pu = full.marginal([mapping.u_name])
    return pxyw, pu


def _as_joint(G: CausalDiagram, O) -> JointTable:
    if isinstance(O, JointTable):
        if set(O.scope) != set(G.nodes):
            raise ShapeMismatchError(f"table scope {O.scope} differs from diagram nodes {G.nodes}")
        return O.reorder(G.nodes)
    return joint_from_cpts(G, O)


def make_equivalent_tuple(G: CausalDiagram, O, z: str, p: int, treatment: str = "X", outcome: str = "Y",
                          order: str = "w_major", w_name: str = "W", u_name: str = "U") -> EquivalentTuple:
    """Replace ``z`` by a pair (W, U) with ``p`` W-states.

    Parameters
    ----------
    G : CausalDiagram
    O : JointTable over all nodes of ``G``, or a list of :class:`Cpt`
    z : str
    p : int
        ``1 <= p <= m``.
    treatment, outcome : str
    order : {"w_major", "u_major"}

    Raises
    ------
    UnknownNodeError
        If ``z`` (or the treatment/outcome) is not in ``G``.
    CriterionError
        If no set containing ``z`` satisfies the back-door or front-door
        criterion for the treatment/outcome pair.
    """
    m = G.states(z)
    for n in (treatment, outcome):
        G.index(n)
    mapping = StateMapping.for_states(z, m, p, order=order, w_name=w_name, u_name=u_name)
    found = find_adjustment_set(G, treatment, outcome, must_contain=[z])
    if found is None:
        raise CriterionError(
            f"no set containing {z!r} satisfies the back-door or front-door criterion for ({treatment}, {outcome})"
        )
    criterion, Q = found
    g_prime = _rewire(G, z, mapping)
    Q_prime = tuple(n for n in g_prime.nodes if n in (set(Q) - {z}) | {w_name, u_name})
    check = satisfies_backdoor if criterion == "backdoor" else satisfies_frontdoor
    if not check(g_prime, Q_prime, treatment, outcome):
        # cannot happen for a correct rewiring; guard against regressions
        raise CriterionError(f"{criterion} criterion lost after the transform")
    joint = _as_joint(G, O)
    joint_prime = _expand_axis(joint, mapping).reorder(g_prime.nodes)
    projected = (
        joint_prime.marginal([treatment, outcome, w_name]),
        joint_prime.marginal([u_name]),
    )
    return EquivalentTuple(g_prime, mapping, projected, joint_prime, criterion, Q, Q_prime, treatment, outcome)


def make_equivalent_tuple_multi(G: CausalDiagram, O, splits: Mapping[str, int], treatment: str = "X",
                                outcome: str = "Y", order: str = "w_major") -> list[EquivalentTuple]:
    """Apply :func:`make_equivalent_tuple` once per entry of ``splits``.

    Each variable ``Z`` is replaced by ``W_Z`` and ``U_Z``. Returns the chain
    of tuples; the last one holds the final diagram and joint.
    """
    chain = []
    graph, data = G, O
    for z, p in splits.items():
        tup = make_equivalent_tuple(graph, data, z, p, treatment, outcome, order,
                                    w_name=f"W_{z}", u_name=f"U_{z}")
        chain.append(tup)
        graph, data = tup.g_prime, tup.joint
    return chain


def equivalent_cpts(tup: EquivalentTuple) -> list[Cpt]:
    """CPTs of every node of ``g_prime`` read off the transformed joint.

    Parent configurations with zero mass (only reachable through virtual
    states) get a uniform row.
    """
    G, joint = tup.g_prime, tup.joint
    out = []
    for name in G.nodes:
        parents = list(G.parents(name))
        fam = joint.marginal(parents + [name]).probs
        mass = fam.sum(axis=-1, keepdims=True)
        k = fam.shape[-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            table = np.where(mass > 0, fam / np.where(mass > 0, mass, 1.0), 1.0 / k)
        out.append(Cpt(name, tuple(parents), table))
    return out


def _effect(joint: JointTable, criterion: str, Q: Sequence[str], x: int, y: int, treatment: str, outcome: str) -> float:
    fn = adjust_backdoor if criterion == "backdoor" else adjust_frontdoor
    return fn(joint, x, y, list(Q), treatment, outcome)


def verify_equivalence(G: CausalDiagram, O, tup: EquivalentTuple, x: int = 0, y: int = 0,
                       tol: float = 1e-12, max_cells: int = EXACT_CELL_LIMIT) -> EquivalenceReport:
    """Evaluate the adjustment formula on both representations.

    Raises :class:`ScaleError` when either joint has more than ``max_cells``
    cells.
    """
    joint = _as_joint(G, O)
    for j in (joint, tup.joint):
        if j.probs.size > max_cells:
            raise ScaleError(f"exact evaluation needs {j.probs.size} cells, limit is {max_cells}")
    t, o = tup.treatment, tup.outcome
    before = _effect(joint, tup.criterion, tup.adjustment, x, y, t, o)
    after = _effect(tup.joint, tup.criterion, tup.adjustment_prime, x, y, t, o)
    return EquivalenceReport(before, after, tup.criterion, tol)


def suggest_p(m: int, sample_count: int, x_states: int = 2, y_states: int = 2, per_state: int = 30) -> int:
    """Largest ``p`` whose bounding problem is covered by ``sample_count`` samples.

    The problem needs ``max(|X| |Y| p, q) * per_state`` samples. Divisors of
    ``m`` are preferred so that no virtual states are needed; if no ``p``
    fits, 1 is returned.
    """
    fits = [
        p for p in range(1, m + 1)
        if required_sample_size([(x_states, y_states, p), -(-m // p)], per_state) <= sample_count
    ]
    if not fits:
        return 1
    divisors = [p for p in fits if m % p == 0]
    return max(divisors) if divisors else max(fits)
