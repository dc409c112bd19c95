"""Switchable action dependency graph: a binary vector selects one SE-ADG.

Each switchable pair holds a forward dependency ``(v_i^k, v_j^l)`` and its
switched counterpart ``(v_j^{l+1}, v_i^{k-1})``; b = 0 selects the forward
edge, b = 1 the reverse one. Pairs are bundled into groups that share a
single binary decision.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .seadg import (
    SeAdg,
    Status,
    compile_seadg,
    is_acyclic,
    to_dot,
)


class CyclicGraphError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchablePair:
    forward: tuple
    reverse: tuple
    group: int = -1


def reverse_of(forward) -> tuple:
    (i, k), (j, l) = forward
    return ((j, l + 1), (i, k - 1))


class Sadg:
    def __init__(self, skeleton: SeAdg, pairs, groups):
        self.skeleton = skeleton  # intra edges + fixed inter edges
        self.pairs = tuple(pairs)
        self.groups = tuple(tuple(g) for g in groups)  # pair indices per group
        self._side_edges = {}

    @property
    def m_total(self) -> int:
        return len(self.groups)

    @property
    def fixed_inter_edges(self) -> set:
        return self.skeleton.inter_edges()

    def zeros(self) -> tuple:
        return (0,) * self.m_total

    def group_edges(self, gid: int, value: int) -> tuple:
        key = (gid, value)
        if key not in self._side_edges:
            self._side_edges[key] = tuple(
                self.pairs[p].reverse if value else self.pairs[p].forward for p in self.groups[gid]
            )
        return self._side_edges[key]

    def group_vertices(self, gid: int) -> set:
        out = set()
        for p in self.groups[gid]:
            pr = self.pairs[p]
            out.update(pr.forward)
            out.update(pr.reverse)
        return out

    def selected_edges(self, b) -> set:
        b = as_vector(self, b)
        edges = set(self.skeleton.edges)
        for gid, val in enumerate(b):
            edges.update(self.group_edges(gid, val))
        return edges

    def candidate_edges(self) -> set:
        """Skeleton plus both sides of every pair."""
        edges = set(self.skeleton.edges)
        for pr in self.pairs:
            edges.add(pr.forward)
            edges.add(pr.reverse)
        return edges


def as_vector(s: Sadg, b) -> tuple:
    if isinstance(b, dict):
        missing = [g for g in range(s.m_total) if g not in b]
        if missing:
            raise KeyError(f"no assignment for groups {missing}")
        b = [b[g] for g in range(s.m_total)]
    b = tuple(int(x) for x in b)
    if len(b) != s.m_total:
        raise KeyError(f"binary vector has {len(b)} entries, expected {s.m_total}")
    if any(x not in (0, 1) for x in b):
        raise ValueError("binary vector entries must be 0 or 1")
    return b


def split_dependencies(g: SeAdg):
    """Partition compiled inter-AGV dependencies into switchable pairs and fixed edges."""
    pairs, fixed = [], []
    for fwd in sorted(g.inter_edges(), key=_edge_key(g)):
        (i, k), (j, l) = fwd
        if k - 1 >= 0 and l + 1 < len(g.chains[j]):
            pairs.append(SwitchablePair(fwd, reverse_of(fwd)))
        else:
            fixed.append(fwd)
    return pairs, fixed


def _edge_key(g: SeAdg):
    order = {a: n for n, a in enumerate(g.agents)}
    return lambda e: (order[e[0][0]], order[e[1][0]], e[0][1], e[1][1])


def group_dependencies(pairs, skeleton: SeAdg):
    """Bundle same-direction and opposing runs between one agent pair.

    Returns ``(pairs, groups)`` with group ids written into the pairs. Runs are
    found in one pass per agent pair over its pairs sorted by the tail index.
    """
    order = {a: n for n, a in enumerate(skeleton.agents)}
    by_agents = defaultdict(dict)
    for idx, pr in enumerate(pairs):
        (i, k), (j, l) = pr.forward
        by_agents[(i, j)][(k, l)] = idx
    raw = []
    for (i, j), lookup in by_agents.items():
        taken = set()
        for k, l in sorted(lookup):
            if (k, l) in taken:
                continue
            run = [(k, l)]
            taken.add((k, l))
            for dl in (1, -1):
                if (k + 1, l + dl) in lookup and (k + 1, l + dl) not in taken:
                    n = 1
                    while (k + n, l + n * dl) in lookup and (k + n, l + n * dl) not in taken:
                        run.append((k + n, l + n * dl))
                        taken.add((k + n, l + n * dl))
                        n += 1
                    break
            raw.append(((order[i], order[j], k), [lookup[x] for x in run]))
    raw.sort(key=lambda r: r[0])
    new_pairs = list(pairs)
    groups = []
    for gid, (_, members) in enumerate(raw):
        groups.append(tuple(members))
        for p in members:
            new_pairs[p] = SwitchablePair(pairs[p].forward, pairs[p].reverse, gid)
    return new_pairs, groups


def compile_sadg(plan, roadmap) -> Sadg:
    full = compile_seadg(plan, roadmap)
    if not is_acyclic(full):
        raise CyclicGraphError("plan yields a cyclic SE-ADG")
    pairs, fixed = split_dependencies(full)
    skeleton = SeAdg(full.chains, full.intra_edges() | set(fixed))
    pairs, groups = group_dependencies(pairs, skeleton)
    return Sadg(skeleton, pairs, groups)


def realize(s: Sadg, b, status=None) -> SeAdg:
    status = s.skeleton.status if status is None else status
    return SeAdg(s.skeleton.chains, s.selected_edges(b), dict(status))


def new_edges(s: Sadg, b_old, b_new) -> set:
    return s.selected_edges(b_new) - s.selected_edges(b_old)


def switch_admissible(s: Sadg, b_old, b_new, status=None) -> bool:
    """Every edge introduced by the switch must point at a staged vertex."""
    status = s.skeleton.status if status is None else status
    return all(status[h] == Status.STAGED for _, h in new_edges(s, b_old, b_new))


def flip_admissible(s: Sadg, b, gid: int, status) -> bool:
    """Single-group version of switch_admissible without building full edge sets."""
    b = as_vector(s, b)
    present = None
    for e in s.group_edges(gid, 1 - b[gid]):
        if status[e[1]] == Status.STAGED:
            continue
        if present is None:
            present = s.selected_edges(b)
        if e not in present:
            return False
    return True


def sadg_to_dot(s: Sadg, b=None, subset=None) -> str:
    b = s.zeros() if b is None else as_vector(s, b)
    g = realize(s, b)
    unused = s.selected_edges([1 - x for x in b]) - g.edges
    return to_dot(g, dotted=unused, subset=subset, name="sadg")


def realization_acyclic(s: Sadg, b) -> bool:
    return is_acyclic(realize(s, b))

