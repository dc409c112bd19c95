"""Switch selection: minimize cumulative completion time over admissible b.

For a fixed binary vector every constraint of the mixed-integer program is a
lower bound on a start or goal time and the objective increases with every
goal time, so the continuous optimum is the earliest-time schedule of the
realized graph. Branch-and-bound therefore only searches over b; partial
assignments are bounded by the schedule of the graph with undecided groups
left out (fewer precedence edges can only shorten longest paths).

Strict inequalities are enforced with a margin ``eps`` on durations, on
intra-AGV successions and on inter-AGV dependencies.
"""
from __future__ import annotations

import itertools
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

from .sadg import Sadg, as_vector, flip_admissible, realize, switch_admissible
from .seadg import SeAdg, Status, is_acyclic

EPS = 1e-3
NODE_BUDGET = 100_000


class InfeasibleError(RuntimeError):
    """The incumbent realization is cyclic; recursive feasibility was violated."""


@dataclass
class DurationModel:
    t_est: dict  # ref -> nominal seconds
    mu: dict = field(default_factory=dict)  # ref -> remaining fraction while in progress

    def delta(self, ref, status: Status) -> float:
        if status == Status.STAGED:
            return self.t_est[ref]
        if status == Status.IN_PROGRESS:
            return min(1.0, max(0.0, self.mu.get(ref, 1.0))) * self.t_est[ref]
        return 0.0


@dataclass
class Schedule:
    t_s: dict
    t_g: dict
    terminal: dict  # agent -> goal time of its last vertex in scope
    cost: float


@dataclass
class SolveResult:
    b_star: tuple
    cost: float
    schedule: Schedule
    nodes_explored: int
    wall_time: float
    free_groups: tuple = ()
    frozen_groups: tuple = ()
    cost_before: float = math.nan
    exhausted: bool = False


def _scope_refs(g, status, scope):
    refs = []
    for a in g.agents:
        for v in g.chains[a]:
            r = v.ref
            if status[r] != Status.COMPLETED and (scope is None or r in scope):
                refs.append(r)
    return refs


def earliest_schedule(g: SeAdg, d: DurationModel, now: float, eps: float = EPS, scope=None):
    """Minimal start/goal times on the realized graph, or None if it is cyclic.

    Completed vertices impose nothing. With ``scope`` only vertices inside it
    are scheduled and each agent's terminal is its last scheduled vertex.
    """
    status = g.status
    refs = _scope_refs(g, status, scope)
    inside = set(refs)
    succ = defaultdict(list)
    indeg = {r: 0 for r in refs}
    for u, v in g.edges:
        if u in inside and v in inside:
            succ[u].append(v)
            indeg[v] += 1
    t_s = {r: now for r in refs}
    t_g = {}
    ready = [r for r in refs if indeg[r] == 0]
    while ready:
        u = ready.pop()
        t_g[u] = t_s[u] + d.delta(u, status[u]) + eps
        w = t_g[u] + eps
        for v in succ[u]:
            if t_s[v] < w:
                t_s[v] = w
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(t_g) < len(refs):
        return None
    last = {}
    for r in refs:
        last[r[0]] = r
    terminal = {a: t_g[last[a]] for a in g.agents if a in last}
    cost = math.fsum(terminal[a] for a in g.agents if a in terminal)
    return Schedule(t_s, t_g, terminal, cost)


def frozen_groups(s: Sadg, b_current, status, groups=None) -> set:
    """Groups whose flip would add an edge into a vertex that already started."""
    b_current = as_vector(s, b_current)
    groups = range(s.m_total) if groups is None else groups
    return {g for g in groups if not flip_admissible(s, b_current, g, status)}


class _Problem:
    """Integer-indexed view of one solve instance."""

    def __init__(self, s: Sadg, d: DurationModel, b_current, status, now, eps, subset):
        self.s = s
        self.now = now
        self.eps = eps
        scope = None if subset is None else subset.vertices
        refs = _scope_refs(s.skeleton, status, scope)
        self.refs = refs
        idx = {r: n for n, r in enumerate(refs)}
        self.idx = idx
        self.n = len(refs)
        self.delta = [d.delta(r, status[r]) for r in refs]

        in_scope = range(s.m_total) if subset is None else sorted(subset.groups)
        frozen = frozen_groups(s, b_current, status, in_scope)
        self.free = tuple(g for g in in_scope if g not in frozen)
        self.frozen = tuple(sorted(frozen))

        def keep(edges):
            return [(idx[u], idx[v]) for u, v in edges if u in idx and v in idx]

        free_set = set(self.free)
        base = list(s.skeleton.edges)
        for g in range(s.m_total):
            if g not in free_set:
                base.extend(s.group_edges(g, b_current[g]))
        self.base_succ = [[] for _ in range(self.n)]
        self.base_indeg = [0] * self.n
        for u, v in keep(base):
            self.base_succ[u].append(v)
            self.base_indeg[v] += 1
        self.gedges = {g: (keep(s.group_edges(g, 0)), keep(s.group_edges(g, 1))) for g in self.free}
        last = {}
        for r in refs:
            last[r[0]] = idx[r]
        self.terminals = [last[a] for a in s.skeleton.agents if a in last]

    def evaluate(self, assign: dict, times=False):
        n = self.n
        indeg = self.base_indeg[:]
        extra = defaultdict(list)
        for g, val in assign.items():
            for u, v in self.gedges[g][val]:
                extra[u].append(v)
                indeg[v] += 1
        now, eps, delta, base_succ = self.now, self.eps, self.delta, self.base_succ
        ts = [now] * n
        tg = [0.0] * n
        ready = [i for i in range(n) if indeg[i] == 0]
        done = 0
        while ready:
            u = ready.pop()
            done += 1
            tgu = ts[u] + delta[u] + eps
            tg[u] = tgu
            w = tgu + eps
            for v in base_succ[u]:
                if ts[v] < w:
                    ts[v] = w
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
            if u in extra:
                for v in extra[u]:
                    if ts[v] < w:
                        ts[v] = w
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        ready.append(v)
        if done < n:
            return None
        cost = math.fsum(tg[t] for t in self.terminals)
        if times:
            return cost, ts, tg
        return cost

    def schedule(self, assign) -> Schedule:
        cost, ts, tg = self.evaluate(assign, times=True)
        t_s = {r: ts[i] for i, r in enumerate(self.refs)}
        t_g = {r: tg[i] for i, r in enumerate(self.refs)}
        terminal = {self.refs[i][0]: tg[i] for i in self.terminals}
        return Schedule(t_s, t_g, terminal, cost)


def _check_incumbent(s, b_current, status):
    if not is_acyclic(realize(s, b_current, status)):
        raise InfeasibleError("incumbent realization is cyclic")


def solve(s: Sadg, d: DurationModel, b_current, subset=None, now: float = 0.0, status=None,
          eps: float = EPS, node_budget: int = NODE_BUDGET) -> SolveResult:
    """Depth-first branch-and-bound over the free groups, incumbent = b_current.

    Ties are broken toward fewer flips from ``b_current``, then toward the
    lexicographically smallest vector over the free groups.
    """
    t0 = time.perf_counter()
    status = s.skeleton.status if status is None else status
    b_current = as_vector(s, b_current)
    _check_incumbent(s, b_current, status)
    prob = _Problem(s, d, b_current, status, now, eps, subset)
    free = prob.free
    cur = {g: b_current[g] for g in free}
    cost_before = prob.evaluate(cur)

    # branch on the groups whose two sides differ most at the root first
    impact = {}
    for g in free:
        c0, c1 = prob.evaluate({g: 0}), prob.evaluate({g: 1})
        impact[g] = math.inf if c0 is None or c1 is None else abs(c0 - c1)
    order = sorted(free, key=lambda g: (-impact[g], g))

    best = {"key": (cost_before, 0, tuple(b_current[g] for g in free)), "assign": cur}
    nodes = 0
    exhausted = False

    def dfs(depth, assign, flips):
        nonlocal nodes, exhausted
        if exhausted:
            return
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            return
        bound = prob.evaluate(assign)
        if bound is None:
            return
        bcost, bflips, _ = best["key"]
        if bound > bcost or (bound == bcost and flips > bflips):
            return
        if depth == len(order):
            key = (bound, flips, tuple(assign[g] for g in free))
            if key < best["key"]:
                best["key"] = key
                best["assign"] = dict(assign)
            return
        g = order[depth]
        keep_val = b_current[g]
        for val in (keep_val, 1 - keep_val):
            assign[g] = val
            dfs(depth + 1, assign, flips + (val != keep_val))
            del assign[g]

    dfs(0, {}, 0)
    if exhausted:
        # budget ran out: keep the incumbent, which is known to be safe
        best["assign"] = cur
    b_star = list(b_current)
    for g, val in best["assign"].items():
        b_star[g] = val
    b_star = tuple(b_star)
    sched = prob.schedule(best["assign"])
    return SolveResult(
        b_star, sched.cost, sched, nodes, time.perf_counter() - t0,
        free, prob.frozen, cost_before, exhausted,
    )


def oracle_solve(s: Sadg, d: DurationModel, b_current, subset=None, now: float = 0.0, status=None,
                 eps: float = EPS, cap: int = 20) -> SolveResult:
    """Exhaustive enumeration through realize() and earliest_schedule()."""
    t0 = time.perf_counter()
    status = s.skeleton.status if status is None else status
    b_current = as_vector(s, b_current)
    _check_incumbent(s, b_current, status)
    groups = list(range(s.m_total)) if subset is None else sorted(subset.groups)
    frozen = frozen_groups(s, b_current, status, groups)
    free = [g for g in groups if g not in frozen]
    if len(free) > cap:
        raise ValueError(f"{len(free)} free groups exceed the enumeration cap of {cap}")
    scope = None if subset is None else subset.vertices
    best = None
    count = 0
    for values in itertools.product((0, 1), repeat=len(free)):
        b = list(b_current)
        for g, val in zip(free, values):
            b[g] = val
        b = tuple(b)
        count += 1
        if not switch_admissible(s, b_current, b, status):
            continue
        sched = earliest_schedule(realize(s, b, status), d, now, eps, scope)
        if sched is None:
            continue
        flips = sum(b[g] != b_current[g] for g in free)
        key = (sched.cost, flips, tuple(b[g] for g in free))
        if best is None or key < best[0]:
            best = (key, b, sched)
    cur = earliest_schedule(realize(s, b_current, status), d, now, eps, scope)
    _, b_star, sched = best
    return SolveResult(
        b_star, sched.cost, sched, count, time.perf_counter() - t0,
        tuple(free), tuple(sorted(frozen)), cur.cost, False,
    )


def nominal_durations(s: Sadg, sc) -> DurationModel:
    from .simulator import vertex_durations

    return DurationModel(vertex_durations(s.skeleton, sc))
