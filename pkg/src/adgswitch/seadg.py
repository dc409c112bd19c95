"""Spatially-exclusive action dependency graph (SE-ADG).

A vertex is addressed by ``(agent, index)`` with a 0-based index into the
agent's chain. Edges are ``(tail, head)`` pairs of such refs; ``head`` may only
start once ``tail`` is completed.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum

from .mapf import MapfPlan, plan_conflicts
from .roadmap import spatially_exclusive


class Status(IntEnum):
    STAGED = 0
    IN_PROGRESS = 1
    COMPLETED = 2

    def __str__(self):
        return self.name.lower().replace("_", "-")


class InvalidPlanError(ValueError):
    pass


class ExecutionError(RuntimeError):
    """Illegal status transition; a blocked start would be a collision."""


@dataclass(frozen=True)
class SeAdgVertex:
    agent: object
    index: int
    tuples: tuple  # PlanTuple sequence

    @property
    def ref(self):
        return (self.agent, self.index)

    @property
    def start_vertex(self):
        return self.tuples[0].vertex

    @property
    def goal_vertex(self):
        return self.tuples[-1].vertex

    @property
    def planned_goal_time(self) -> int:
        return self.tuples[-1].time

    def path(self) -> list:
        """Roadmap vertices visited, in-place waits collapsed."""
        out = [self.tuples[0].vertex]
        for q in self.tuples[1:]:
            if q.vertex != out[-1]:
                out.append(q.vertex)
        return out


class SeAdg:
    def __init__(self, chains: dict, edges, status: dict | None = None):
        self.chains = chains  # agent -> tuple[SeAdgVertex]
        self.agents = tuple(chains)
        self.edges = frozenset(edges)
        self.status = status if status is not None else {
            v.ref: Status.STAGED for c in chains.values() for v in c
        }
        self._preds = None

    def vertex(self, ref) -> SeAdgVertex:
        return self.chains[ref[0]][ref[1]]

    def refs(self) -> list:
        return [(a, k) for a in self.agents for k in range(len(self.chains[a]))]

    def __len__(self):
        return sum(len(c) for c in self.chains.values())

    @property
    def preds(self) -> dict:
        if self._preds is None:
            p = defaultdict(list)
            for u, v in self.edges:
                p[v].append(u)
            self._preds = p
        return self._preds

    def intra_edges(self) -> set:
        return {e for e in self.edges if e[0][0] == e[1][0]}

    def inter_edges(self) -> set:
        return {e for e in self.edges if e[0][0] != e[1][0]}

    def copy(self) -> "SeAdg":
        return SeAdg(self.chains, self.edges, dict(self.status))

    def with_edges(self, edges, status=None) -> "SeAdg":
        return SeAdg(self.chains, edges, dict(self.status if status is None else status))

    def front(self, agent):
        """First non-completed vertex of ``agent`` or None when it is done."""
        for v in self.chains[agent]:
            if self.status[v.ref] != Status.COMPLETED:
                return v.ref
        return None

    def __repr__(self):
        return f"SeAdg(vertices={len(self)}, edges={len(self.edges)})"


def _stage_one(plan: MapfPlan, roadmap) -> dict:
    chains = {}
    for agent, tuples in plan.paths.items():
        verts = []
        p = tuples[0]
        cur = [p]
        for q in tuples[1:]:
            cur.append(q)
            if spatially_exclusive(p.vertex, q.vertex, roadmap):
                verts.append(cur)
                p = q
                cur = [q]
        # leftover tuples that never became exclusive of the segment start
        if len(cur) > 1:
            if verts:
                verts[-1].extend(cur[1:])
            elif any(q.vertex != cur[0].vertex for q in cur):
                verts.append(cur)
        chains[agent] = tuple(SeAdgVertex(agent, k, tuple(v)) for k, v in enumerate(verts))
    return chains


def intra_edges_of(chains: dict) -> set:
    return {
        ((a, k - 1), (a, k)) for a, c in chains.items() for k in range(1, len(c))
    }


def inter_dependencies(chains: dict) -> list:
    """All (v_i^k, v_j^l) with s(v_i^k) = g(v_j^l) and t_g(v_i^k) <= t_g(v_j^l), i != j.

    Hash join on the shared roadmap vertex; same output as the quadruple loop.
    """
    by_goal = defaultdict(list)
    for a, c in chains.items():
        for v in c:
            by_goal[v.goal_vertex].append(v)
    out = []
    for a, c in chains.items():
        for v in c:
            for w in by_goal.get(v.start_vertex, ()):
                if w.agent != a and v.planned_goal_time <= w.planned_goal_time:
                    out.append((v.ref, w.ref))
    return out


def compile_seadg(plan: MapfPlan, roadmap) -> SeAdg:
    bad = plan_conflicts(plan, roadmap)
    if bad:
        raise InvalidPlanError(f"invalid plan: {bad[0]}")
    chains = _stage_one(plan, roadmap)
    edges = intra_edges_of(chains) | set(inter_dependencies(chains))
    return SeAdg(chains, edges)


def topological_order(nodes, edges):
    """Kahn's algorithm; returns the order or None when a cycle exists.

    Ties are broken by insertion order of ``nodes`` so output is deterministic.
    """
    nodes = list(nodes)
    indeg = {n: 0 for n in nodes}
    succ = defaultdict(list)
    for u, v in edges:
        if u in indeg and v in indeg:
            succ[u].append(v)
            indeg[v] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    ready.reverse()
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return order if len(order) == len(nodes) else None


def is_acyclic(g: SeAdg) -> bool:
    return topological_order(g.refs(), g.edges) is not None


def executable_vertices(g: SeAdg) -> set:
    out = set()
    for a in g.agents:
        ref = g.front(a)
        if ref is None or g.status[ref] != Status.STAGED:
            continue
        if all(g.status[u] == Status.COMPLETED for u in g.preds.get(ref, ())):
            out.add(ref)
    return out


def is_executable(g: SeAdg, ref) -> bool:
    if g.status[ref] != Status.STAGED or g.front(ref[0]) != ref:
        return False
    return all(g.status[u] == Status.COMPLETED for u in g.preds.get(ref, ()))


def mark_status(g: SeAdg, ref, new: Status) -> SeAdg:
    old = g.status[ref]
    new = Status(new)
    if new == Status.IN_PROGRESS:
        if old != Status.STAGED:
            raise ExecutionError(f"{ref}: {old} -> {new} is not allowed")
        if not is_executable(g, ref):
            blockers = [u for u in g.preds.get(ref, ()) if g.status[u] != Status.COMPLETED]
            raise ExecutionError(f"{ref} is blocked by {blockers}")
    elif new == Status.COMPLETED:
        if old != Status.IN_PROGRESS:
            raise ExecutionError(f"{ref}: {old} -> {new} is not allowed")
    else:
        raise ExecutionError(f"{ref}: {old} -> {new} is not allowed")
    g.status[ref] = new
    return g


_COLORS = {Status.STAGED: "white", Status.IN_PROGRESS: "gold", Status.COMPLETED: "palegreen"}


def _node_id(ref) -> str:
    return f'"{ref[0]}_{ref[1]}"'


def to_dot(g: SeAdg, dotted=(), subset=None, name="seadg") -> str:
    """Graphviz source: one row per agent, inter-AGV edges solid, ``dotted`` extra edges dotted."""
    subset = set(subset or ())
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=ellipse, style=filled];"]
    for a in g.agents:
        lines.append(f'  subgraph "cluster_{a}" {{ label="AGV {a}"; rank=same;')
        for v in g.chains[a]:
            fill = "lightsalmon" if v.ref in subset else _COLORS[g.status[v.ref]]
            label = f"v_{a}^{v.index}\\n{v.start_vertex}->{v.goal_vertex}"
            lines.append(f'    {_node_id(v.ref)} [label="{label}", fillcolor="{fill}"];')
        lines.append("  }")
    for u, v in sorted(g.edges, key=str):
        style = "color=gray" if u[0] == v[0] else "color=black"
        lines.append(f"  {_node_id(u)} -> {_node_id(v)} [{style}];")
    for u, v in sorted(dotted, key=str):
        lines.append(f"  {_node_id(u)} -> {_node_id(v)} [style=dotted, color=red];")
    lines.append("}")
    return "\n".join(lines) + "\n"
