"""Finite-horizon SADG subset extraction and the two-DAG split check."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .sadg import Sadg, as_vector
from .seadg import SeAdg, Status, topological_order


@dataclass(frozen=True)
class HorizonSubset:
    vertices: frozenset
    groups: frozenset  # group ids whose binary variable is optimized
    fixed_edges: frozenset  # non-switchable edges with both ends inside
    boundary_edges: frozenset  # candidate edges leaving the subset
    frozen_assignment: dict  # group id -> value for groups outside

    def horizon_vertex(self, agent, status) -> object:
        """Highest-index non-completed vertex of ``agent`` inside the subset."""
        best = None
        for ref in self.vertices:
            if ref[0] == agent and status[ref] != Status.COMPLETED:
                if best is None or ref[1] > best[1]:
                    best = ref
        return best


def extract_subset(s: Sadg, estimates, horizon: float, now: float = 0.0, b_current=None, status=None) -> HorizonSubset:
    """Grow the set of vertices finishing within ``now + horizon`` until nothing points in.

    ``estimates`` needs a ``t_g`` mapping for non-completed vertices. The seed
    also holds every completed and in-progress vertex. Absorption pulls in the
    tail of every inward candidate edge (forward and reverse sides alike) and
    every vertex of a group that touches the subset, so each group is either
    fully inside or fully outside.
    """
    status = s.skeleton.status if status is None else status
    b_current = s.zeros() if b_current is None else as_vector(s, b_current)
    limit = now + horizon
    seed = []
    for ref in s.skeleton.refs():
        st = status[ref]
        if st != Status.STAGED:
            seed.append(ref)
        else:
            tg = estimates.t_g.get(ref)
            if tg is not None and tg <= limit:
                seed.append(ref)

    candidate = s.candidate_edges()
    preds = defaultdict(list)
    for u, v in candidate:
        preds[v].append(u)
    vgroups = defaultdict(set)
    for gid in range(s.m_total):
        for ref in s.group_vertices(gid):
            vgroups[ref].add(gid)

    inside = set(seed)
    groups = set()
    stack = list(seed)
    while stack:
        v = stack.pop()
        for u in preds.get(v, ()):
            if u not in inside:
                inside.add(u)
                stack.append(u)
        for gid in vgroups.get(v, ()):
            if gid in groups:
                continue
            groups.add(gid)
            for w in s.group_vertices(gid):
                if w not in inside:
                    inside.add(w)
                    stack.append(w)

    fixed = frozenset(e for e in s.skeleton.edges if e[0] in inside and e[1] in inside)
    boundary = frozenset(e for e in candidate if e[0] in inside and e[1] not in inside)
    frozen = {g: b_current[g] for g in range(s.m_total) if g not in groups}
    return HorizonSubset(frozenset(inside), frozenset(groups), fixed, boundary, frozen)


def check_split(full: SeAdg, subset) -> bool:
    """Sufficient acyclicity certificate: both sides acyclic, crossings only leave the subset."""
    subset = set(subset)
    inner, outer, rest = [], [], []
    for ref in full.refs():
        (inner if ref in subset else outer).append(ref)
    for u, v in full.edges:
        a, b = u in subset, v in subset
        if a and b:
            rest.append(("in", u, v))
        elif not a and not b:
            rest.append(("out", u, v))
        elif not a and b:
            return False
    in_edges = [(u, v) for side, u, v in rest if side == "in"]
    out_edges = [(u, v) for side, u, v in rest if side == "out"]
    return topological_order(inner, in_edges) is not None and topological_order(outer, out_edges) is not None
