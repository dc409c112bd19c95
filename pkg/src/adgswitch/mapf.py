"""MAPF plans: validation and a prioritized space-time A* generator.

Plans use integer time steps. An agent is taken to rest at its goal after its
last tuple, so a later agent driving through an occupied goal is a vertex
conflict.
"""
from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple


class PlanTuple(NamedTuple):
    vertex: object
    time: int


class PlanningError(RuntimeError):
    def __init__(self, agent, msg=""):
        super().__init__(msg or f"no conflict-free path for agent {agent!r}")
        self.agent = agent


@dataclass
class MapfPlan:
    paths: dict  # agent id -> list[PlanTuple]

    def __post_init__(self):
        self.paths = {a: [PlanTuple(v, int(t)) for v, t in p] for a, p in self.paths.items()}

    @classmethod
    def from_vertices(cls, paths: dict) -> "MapfPlan":
        """Build a plan from per-agent vertex lists starting at time 0."""
        return cls({a: [PlanTuple(v, t) for t, v in enumerate(p)] for a, p in paths.items()})

    @property
    def agents(self) -> list:
        return list(self.paths)

    def makespan(self) -> int:
        return max((p[-1].time for p in self.paths.values() if p), default=0)

    def to_json(self) -> str:
        return json.dumps({str(a): [[v, t] for v, t in p] for a, p in self.paths.items()})


def save_plan(plan: MapfPlan, path) -> None:
    Path(path).write_text(plan.to_json())


def load_plan(path, sc=None) -> MapfPlan:
    raw = json.loads(Path(path).read_text())
    if sc is not None:
        by_name = {str(a): a for a in sc.agent_ids}
        raw = {by_name.get(k, k): v for k, v in raw.items()}
    return MapfPlan(raw)


@dataclass(frozen=True, order=True)
class Violation:
    kind: str  # vertex | swap | endpoint | adjacency | timing | agents
    time: int
    agents: tuple
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> list:
        return [v.kind for v in self.violations]

    def __len__(self):
        return len(self.violations)


def plan_conflicts(plan: MapfPlan, roadmap) -> list:
    """Structural checks that do not need start/goal data."""
    out = []
    for a, p in plan.paths.items():
        if not p:
            out.append(Violation("timing", 0, (a,), "empty path"))
            continue
        if p[0].time != 0:
            out.append(Violation("timing", p[0].time, (a,), "path must start at t=0"))
        for prev, cur in zip(p, p[1:]):
            if cur.time != prev.time + 1:
                out.append(Violation("timing", cur.time, (a,), "times must advance by one step"))
        for q in p:
            if q.vertex not in roadmap.loc:
                out.append(Violation("adjacency", q.time, (a,), f"unknown vertex {q.vertex!r}"))
        for prev, cur in zip(p, p[1:]):
            if (
                prev.vertex != cur.vertex
                and prev.vertex in roadmap.loc
                and not roadmap.adjacent(prev.vertex, cur.vertex)
            ):
                out.append(
                    Violation("adjacency", cur.time, (a,), f"{prev.vertex!r}->{cur.vertex!r} is not an edge")
                )
    if out:
        return sorted(out, key=_sort_key)

    horizon = plan.makespan()
    occ = {}  # (vertex, t) -> agents
    for a, p in plan.paths.items():
        for t in range(horizon + 1):
            v = p[min(t, len(p) - 1)].vertex
            occ.setdefault((v, t), []).append(a)
    for (v, t), who in occ.items():
        if len(who) > 1:
            who = tuple(sorted(who, key=str))
            out.append(Violation("vertex", t, who, f"vertex {v!r}"))
    moves = {}
    for a, p in plan.paths.items():
        for prev, cur in zip(p, p[1:]):
            if prev.vertex != cur.vertex:
                moves.setdefault((prev.vertex, cur.vertex, cur.time), []).append(a)
    for (u, v, t), who in moves.items():
        for b in moves.get((v, u, t), []):
            for a in who:
                if str(a) < str(b):
                    out.append(Violation("swap", t, (a, b), f"edge {u!r}-{v!r}"))
    return sorted(out, key=_sort_key)


def _sort_key(v: Violation):
    return (v.kind, v.time, tuple(str(a) for a in v.agents), v.detail)


def validate_plan(plan: MapfPlan, sc) -> ValidationReport:
    """Every violation of a valid MAPF solution; an empty report means valid."""
    violations = []
    want = set(sc.agent_ids)
    have = set(plan.paths)
    for a in sorted(want ^ have, key=str):
        violations.append(Violation("agents", 0, (a,), "agent missing" if a in want else "unknown agent"))
    sub = MapfPlan({a: p for a, p in plan.paths.items() if a in want})
    violations.extend(plan_conflicts(sub, sc.roadmap))
    for ag in sc.agents:
        p = plan.paths.get(ag.id)
        if not p:
            continue
        if p[0].vertex != ag.start:
            violations.append(Violation("endpoint", p[0].time, (ag.id,), "first vertex is not the start"))
        if p[-1].vertex != ag.goal:
            violations.append(Violation("endpoint", p[-1].time, (ag.id,), "last vertex is not the goal"))
    return ValidationReport(sorted(violations, key=_sort_key))


def bfs_distances(roadmap, goal) -> dict:
    dist = {goal: 0}
    q = deque([goal])
    while q:
        u = q.popleft()
        for n in roadmap.adj[u]:
            if n not in dist:
                dist[n] = dist[u] + 1
                q.append(n)
    return dist


class _Reservations:
    def __init__(self):
        self.vertex = set()  # (v, t)
        self.edge = set()  # (u, v, t): someone moves u -> v arriving at t
        self.rest = {}  # v -> first time an agent parks there for good
        self.last = {}  # v -> last reserved transit time

    def add_path(self, path):
        for q in path:
            self.vertex.add((q.vertex, q.time))
            self.last[q.vertex] = max(self.last.get(q.vertex, -1), q.time)
        for prev, cur in zip(path, path[1:]):
            if prev.vertex != cur.vertex:
                self.edge.add((prev.vertex, cur.vertex, cur.time))
        end = path[-1]
        self.rest[end.vertex] = end.time

    def blocked(self, v, t) -> bool:
        if (v, t) in self.vertex:
            return True
        r = self.rest.get(v)
        return r is not None and t >= r

    def swap(self, u, v, t) -> bool:
        return (v, u, t) in self.edge


def space_time_astar(roadmap, start, goal, res: _Reservations, max_expansions=20000, max_time=None):
    """Shortest path in (vertex, time) avoiding reservations; None when exhausted."""
    h = bfs_distances(roadmap, goal)
    if start not in h:
        return None
    if res.blocked(start, 0):
        return None
    if max_time is None:
        max_time = max(res.last.values(), default=0) + 2 * len(roadmap) + 2
    arrive_after = res.last.get(goal, -1)
    counter = 0
    openq = [(h[start], 0, counter, start, None)]
    parent = {}
    seen = set()
    expansions = 0
    while openq:
        f, t, _, v, par = heapq.heappop(openq)
        if (v, t) in seen:
            continue
        seen.add((v, t))
        parent[(v, t)] = par
        if v == goal and t > arrive_after:
            path = []
            node = (v, t)
            while node is not None:
                path.append(PlanTuple(node[0], node[1]))
                node = parent[node]
            return path[::-1]
        expansions += 1
        if expansions > max_expansions or t >= max_time:
            if expansions > max_expansions:
                return None
            continue
        for n in (v,) + roadmap.adj[v]:
            if n not in h or (n, t + 1) in seen:
                continue
            if res.blocked(n, t + 1):
                continue
            if n != v and res.swap(v, n, t + 1):
                continue
            counter += 1
            heapq.heappush(openq, (t + 1 + h[n], t + 1, counter, n, (v, t)))
    return None


def plan_prioritized(sc, order=None, max_expansions=20000) -> MapfPlan:
    """Plan agents one by one in ``order``; earlier agents become moving obstacles.

    Raises PlanningError naming the first agent that cannot be routed.
    """
    order = list(order) if order is not None else sc.agent_ids
    res = _Reservations()
    paths = {}
    for aid in order:
        ag = sc.agent(aid)
        path = space_time_astar(sc.roadmap, ag.start, ag.goal, res, max_expansions)
        if path is None:
            raise PlanningError(aid)
        res.add_path(path)
        paths[aid] = path
    return MapfPlan({a: paths[a] for a in sc.agent_ids})


def plan_with_restarts(sc, restarts=10, seed=0, max_expansions=20000, require_acyclic=True) -> MapfPlan:
    """Agent-index order first, then random priority orders.

    Plans whose dependency graph would be cyclic are rejected like failures.
    """
    rng = random.Random(seed)
    order = sc.agent_ids
    last = None
    for _ in range(restarts + 1):
        try:
            plan = plan_prioritized(sc, order, max_expansions)
        except PlanningError as e:
            last = e
        else:
            if not require_acyclic or check_initial_acyclicity(plan, sc):
                return plan
            last = PlanningError(None, "plan yields a cyclic dependency graph")
        order = sc.agent_ids
        rng.shuffle(order)
    raise last


def check_initial_acyclicity(plan: MapfPlan, sc) -> bool:
    from .seadg import compile_seadg, is_acyclic

    return is_acyclic(compile_seadg(plan, sc.roadmap))
