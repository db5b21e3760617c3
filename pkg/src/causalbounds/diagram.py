"""Causal diagrams over categorical variables.

A :class:`CausalDiagram` is an immutable DAG whose nodes carry a state
count. d-separation is decided with the Bayes-ball reachability procedure
(Koller & Friedman, Algorithm 3.1), and the back-door / front-door
criteria are built on a variant of the same traversal that only accepts
trails leaving the source node against an arrow.
"""
from __future__ import annotations

import json
from collections import deque
from typing import Iterable, Mapping, Sequence

from .errors import CycleError, OverlapError, UnknownNodeError

__all__ = [
    "CausalDiagram",
    "build_diagram",
    "d_separated",
    "satisfies_backdoor",
    "satisfies_frontdoor",
    "load_diagram",
    "diagram_from_dict",
    "diagram_to_dict",
]


class CausalDiagram:
    """DAG with named categorical nodes.

    Parameters
    ----------
    nodes : sequence of (name, state_count)
        Declaration order is kept and used to break ties in the
        topological order.
    edges : iterable of (parent, child)
    """

    __slots__ = ("_names", "_states", "_index", "_parents", "_children", "_topo", "_edges")

    def __init__(self, nodes: Sequence[tuple[str, int]], edges: Iterable[tuple[str, str]] = ()):
        names = [str(n) for n, _ in nodes]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate node names: {dup}")
        states = []
        for name, k in nodes:
            k = int(k)
            if k < 1:
                raise ValueError(f"node {name!r} needs at least one state, got {k}")
            states.append(k)
        index = {n: i for i, n in enumerate(names)}
        parents: list[list[int]] = [[] for _ in names]
        children: list[list[int]] = [[] for _ in names]
        edge_set = []
        for edge in edges:
            a, b = edge
            for end in (a, b):
                if end not in index:
                    raise UnknownNodeError(f"edge {a!r} -> {b!r} names undeclared node {end!r}")
            i, j = index[a], index[b]
            if i == j:
                raise CycleError([a, a])
            if i in parents[j]:
                continue
            parents[j].append(i)
            children[i].append(j)
            edge_set.append((a, b))
        self._names = tuple(names)
        self._states = tuple(states)
        self._index = index
        # parents kept in declaration order so CPT layouts are reproducible
        self._parents = tuple(tuple(sorted(p)) for p in parents)
        self._children = tuple(tuple(sorted(c)) for c in children)
        self._edges = tuple(edge_set)
        self._topo = self._toposort()

    def _toposort(self) -> tuple[int, ...]:
        indeg = [len(p) for p in self._parents]
        ready = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        while ready:
            ready.sort()
            i = ready.pop(0)
            order.append(i)
            for c in self._children[i]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self._names):
            raise CycleError(self._find_cycle())
        return tuple(order)

    def _find_cycle(self) -> list[str]:
        color = [0] * len(self._names)
        stack_path: list[int] = []

        def visit(i):
            color[i] = 1
            stack_path.append(i)
            for c in self._children[i]:
                if color[c] == 1:
                    start = stack_path.index(c)
                    return stack_path[start:] + [c]
                if color[c] == 0:
                    found = visit(c)
                    if found:
                        return found
            stack_path.pop()
            color[i] = 2
            return None

        for i in range(len(self._names)):
            if color[i] == 0:
                found = visit(i)
                if found:
                    return [self._names[k] for k in found]
        return []

    # -- accessors -------------------------------------------------------
    @property
    def nodes(self) -> tuple[str, ...]:
        return self._names

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return self._edges

    @property
    def topological_order(self) -> tuple[str, ...]:
        return tuple(self._names[i] for i in self._topo)

    def states(self, name: str) -> int:
        return self._states[self.index(name)]

    def state_counts(self) -> dict[str, int]:
        return dict(zip(self._names, self._states))

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownNodeError(f"unknown node {name!r}") from None

    def parents(self, name: str) -> tuple[str, ...]:
        return tuple(self._names[i] for i in self._parents[self.index(name)])

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(self._names[i] for i in self._children[self.index(name)])

    def descendants(self, names: Iterable[str]) -> set[str]:
        """Proper and improper descendants (the nodes themselves included)."""
        return {self._names[i] for i in self._reach(self._idx_set(names), self._children)}

    def ancestors(self, names: Iterable[str]) -> set[str]:
        return {self._names[i] for i in self._reach(self._idx_set(names), self._parents)}

    def __contains__(self, name) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CausalDiagram):
            return NotImplemented
        return (
            self.state_counts() == other.state_counts()
            and set(self._edges) == set(other._edges)
        )

    def __hash__(self):
        return hash((frozenset(self.state_counts().items()), frozenset(self._edges)))

    def __repr__(self) -> str:
        nodes = ", ".join(f"{n}:{k}" for n, k in zip(self._names, self._states))
        edges = ", ".join(f"{a}->{b}" for a, b in self._edges)
        return f"CausalDiagram([{nodes}], [{edges}])"

    # -- internals ---------------------------------------------------------
    def _idx_set(self, names: Iterable[str]) -> set[int]:
        if isinstance(names, str):
            names = [names]
        return {self.index(n) for n in names}

    @staticmethod
    def _reach(start: set[int], nbrs) -> set[int]:
        seen = set(start)
        stack = list(start)
        while stack:
            v = stack.pop()
            for w in nbrs[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def _active_reach(self, starts, cond: set[int], blocked: frozenset = frozenset(),
                      cut: frozenset = frozenset()) -> set[int]:
        """Nodes reachable from ``starts`` along trails active given ``cond``.

        ``starts`` holds (node, direction) states; ``"up"`` means the ball
        arrived from a child and ``"down"`` from a parent. Nodes in
        ``blocked`` are never entered. Edges leaving nodes in ``cut`` are
        treated as deleted.
        """
        if cut:
            children = [() if v in cut else self._children[v] for v in range(len(self._names))]
            parents = [tuple(p for p in self._parents[v] if p not in cut) for v in range(len(self._names))]
        else:
            children, parents = self._children, self._parents
        anc_cond = self._reach(cond, parents)
        queue = deque(s for s in starts if s[0] not in blocked)
        visited = set()
        reached = set()
        while queue:
            node, direction = queue.popleft()
            if (node, direction) in visited:
                continue
            visited.add((node, direction))
            if node not in cond:
                reached.add(node)
            if direction == "up":
                if node in cond:
                    continue
                for p in parents[node]:
                    if p not in blocked:
                        queue.append((p, "up"))
                for c in children[node]:
                    if c not in blocked:
                        queue.append((c, "down"))
            else:
                if node not in cond:
                    for c in children[node]:
                        if c not in blocked:
                            queue.append((c, "down"))
                if node in anc_cond:
                    for p in parents[node]:
                        if p not in blocked:
                            queue.append((p, "up"))
        return reached

    def _backdoor_reach(self, source: int, cond: set[int]) -> set[int]:
        """Nodes joined to ``source`` by an active trail whose first edge points into ``source``."""
        starts = [(p, "up") for p in self._parents[source]]
        return self._active_reach(starts, cond, blocked=frozenset([source]))


def build_diagram(nodes: Sequence[tuple[str, int]], edges: Iterable[tuple[str, str]] = ()) -> CausalDiagram:
    """Validate ``nodes``/``edges`` and return a :class:`CausalDiagram`.

    Raises :class:`CycleError` for cyclic edge sets and
    :class:`UnknownNodeError` for edges naming undeclared nodes.
    """
    return CausalDiagram(nodes, edges)


def _as_set(G: CausalDiagram, names) -> set[int]:
    if names is None:
        return set()
    return G._idx_set(names)


def _require_disjoint(**sets: set[int]) -> None:
    keys = list(sets)
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            common = sets[a] & sets[b]
            if common:
                raise OverlapError(f"sets {a} and {b} overlap")


def d_separated(G: CausalDiagram, A: Iterable[str], B: Iterable[str], C: Iterable[str] = ()) -> bool:
    """True iff every path between ``A`` and ``B`` is blocked by ``C``.

    The three sets must be pairwise disjoint.
    """
    a, b, c = _as_set(G, A), _as_set(G, B), _as_set(G, C)
    _require_disjoint(A=a, B=b, C=c)
    if not a or not b:
        return True
    reached = G._active_reach([(i, "up") for i in a], c)
    return not (reached & b)


def satisfies_backdoor(G: CausalDiagram, Z: Iterable[str], x: str, y: str) -> bool:
    """Back-door criterion for ``Z`` relative to the ordered pair ``(x, y)``."""
    z = _as_set(G, Z)
    ix, iy = G.index(x), G.index(y)
    if ix == iy:
        raise OverlapError("x and y must differ")
    if ix in z or iy in z:
        raise OverlapError("Z must not contain x or y")
    desc_x = G._reach({ix}, G._children) - {ix}
    if z & desc_x:
        return False
    return iy not in G._backdoor_reach(ix, z)


def satisfies_frontdoor(G: CausalDiagram, Z: Iterable[str], x: str, y: str) -> bool:
    """Front-door criterion for ``Z`` relative to the ordered pair ``(x, y)``.

    "No back-door path from x to Z" is read as no *unblocked* one, which is
    the reading under which the criterion identifies the effect. The last
    clause is checked on the set as a whole: Z and y must be d-separated by
    x after deleting the edges out of Z.
    """
    z = _as_set(G, Z)
    ix, iy = G.index(x), G.index(y)
    if ix == iy:
        raise OverlapError("x and y must differ")
    if ix in z or iy in z:
        raise OverlapError("Z must not contain x or y")
    # every directed x -> y path passes through Z
    seen = {ix}
    stack = [ix]
    while stack:
        v = stack.pop()
        for c in G._children[v]:
            if c in z or c in seen:
                continue
            if c == iy:
                return False
            seen.add(c)
            stack.append(c)
    if G._backdoor_reach(ix, set()) & z:
        return False
    # Z and y separated by x once the edges leaving Z are deleted; for a set
    # this ignores trails that only leave Z through another member of Z
    reached = G._active_reach([(i, "up") for i in z], {ix}, cut=frozenset(z))
    return iy not in reached


# -- JSON ----------------------------------------------------------------------

def diagram_to_dict(G: CausalDiagram) -> dict:
    return {
        "nodes": [{"name": n, "states": k} for n, k in zip(G._names, G._states)],
        "edges": [list(e) for e in G.edges],
    }


def diagram_from_dict(data: Mapping) -> CausalDiagram:
    nodes = [(entry["name"], entry.get("states", 2)) for entry in data["nodes"]]
    edges = [tuple(e) for e in data.get("edges", [])]
    return build_diagram(nodes, edges)


def load_diagram(path) -> CausalDiagram:
    with open(path) as fh:
        return diagram_from_dict(json.load(fh))
