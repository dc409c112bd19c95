import itertools
import random

import pytest

from adgswitch.harness import TEMPLATES, generate_map, sample_planned_scenario
from adgswitch.mapf import MapfPlan
from adgswitch.roadmap import Roadmap
from adgswitch.sadg import (
    Sadg, as_vector, compile_sadg, new_edges, realize, sadg_to_dot, split_dependencies, switch_admissible,
)
from adgswitch.seadg import SeAdg, Status, compile_seadg, is_acyclic, mark_status, topological_order

from conftest import corridor, junctions


def same_direction():
    # agent 1 trails agent 0 along a 8-vertex corridor
    rm = corridor(8)
    return rm, MapfPlan.from_vertices({0: [2, 3, 4, 5, 6, 7], 1: [0, 1, 2, 3, 4, 5, 6]})


def head_on():
    # agent 0 runs the corridor then turns into branch u; agent 1 waits in
    # branch d and runs the corridor the other way once agent 0 is through
    verts = [(k, float(k), 0.0) for k in range(5)] + [("u", 4.0, 1.0), ("d", 4.0, -1.0)]
    edges = [(k, k + 1) for k in range(4)] + [(4, "u"), (4, "d")]
    rm = Roadmap(tuple(verts), tuple(edges), 0.3)
    plan = MapfPlan.from_vertices({0: [0, 1, 2, 3, 4, "u"], 1: ["d"] * 5 + [4, 3, 2, 1, 0]})
    return rm, plan


def test_b_zero_is_compiled_graph(crossing):
    sc, plan = crossing
    s = compile_sadg(plan, sc.roadmap)
    assert realize(s, s.zeros()).edges == compile_seadg(plan, sc.roadmap).edges


def test_single_agent_no_pairs():
    s = compile_sadg(MapfPlan.from_vertices({0: [0, 1, 2, 3]}), corridor(4))
    assert s.pairs == () and s.m_total == 0 and not s.fixed_inter_edges


def test_single_crossing_one_pair():
    sc, plan = junctions(1)
    s = compile_sadg(plan, sc.roadmap)
    assert len(s.pairs) == 1
    pr = s.pairs[0]
    assert pr.forward == (("E0", 2), ("N0", 1))
    assert pr.reverse == (("N0", 2), ("E0", 1))
    g1 = realize(s, (1,))
    assert pr.forward not in g1.edges and pr.reverse in g1.edges
    assert g1.edges - realize(s, (0,)).edges == {pr.reverse}


def test_missing_reverse_is_fixed():
    # N0 stops in the centre, so there is no vertex after the one entering it;
    # E1 starts in the centre, so there is no vertex before the one leaving it
    sc, plan = junctions(1)
    paths = {a: [q.vertex for q in p] for a, p in plan.paths.items()}
    paths["N0"] = paths["N0"][:4]
    rm = sc.roadmap
    s = compile_sadg(MapfPlan.from_vertices(paths), rm)
    assert s.pairs == ()
    assert s.fixed_inter_edges == {(("E0", 2), ("N0", 1))}
    plan2 = MapfPlan.from_vertices({"E": ["c0", "h0_1", "h0_2"], "N": ["v0_-2", "v0_-1", "c0", "v0_1"]})
    s2 = compile_sadg(plan2, rm)
    assert s2.pairs == () and s2.fixed_inter_edges == {(("E", 0), ("N", 1))}


def test_same_direction_group():
    rm, plan = same_direction()
    s = compile_sadg(plan, rm)
    # hand derivation: forward edges (0,k)->(1,k+1) for k = 0..4; k = 0 has no
    # predecessor and k = 4 feeds agent 1's last vertex, so three pairs remain
    assert [p.forward for p in s.pairs] == [((0, k), (1, k + 1)) for k in (1, 2, 3)]
    assert s.groups == ((0, 1, 2),)
    assert s.fixed_inter_edges == {((0, 0), (1, 1)), ((0, 4), (1, 5))}


def test_opposing_group():
    rm, plan = head_on()
    s = compile_sadg(plan, rm)
    assert sorted(p.forward for p in s.pairs) == [((0, k), (1, 4 - k)) for k in (1, 2, 3, 4)]
    assert s.m_total == 1 and len(s.groups[0]) == 4
    assert s.fixed_inter_edges == {((0, 0), (1, 4))}
    # agent 1 ends where agent 0 starts, so agent 1 can never go first: the
    # reverse of ((0,1),(1,3)) is ((1,4),(0,0)), a 2-cycle with the fixed edge
    assert is_acyclic(realize(s, (0,)))
    assert not is_acyclic(realize(s, (1,)))


def test_isolated_crossings_two_groups():
    sc, plan = junctions(2)
    s = compile_sadg(plan, sc.roadmap)
    assert s.groups == ((0,), (1,))


def _pair_realization(s, choice):
    edges = set(s.skeleton.edges)
    for p, c in zip(s.pairs, choice):
        edges.add(p.reverse if c else p.forward)
    return SeAdg(s.skeleton.chains, edges)


def _random_sadgs(n, seed=0, dims=(5, 8)):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        rm = generate_map(rng.choice(TEMPLATES), rng.randint(*dims))
        sc, plan = sample_planned_scenario(rm, rng.randint(2, 10), rng.randrange(1 << 30))
        out.append(compile_sadg(plan, rm))
    return out


def test_grouping_single_binary_suffices():
    """Inside a group any mix of forward and reverse sides closes a cycle."""
    fixtures = []
    for rm, plan in (same_direction(), head_on()):
        fixtures.append(compile_sadg(plan, rm))
    fixtures += _random_sadgs(40, seed=5)
    checked = 0
    for s in fixtures:
        for gid, members in enumerate(s.groups):
            if not 2 <= len(members) <= 6:
                continue
            for mix in itertools.product((0, 1), repeat=len(members)):
                choice = [0] * len(s.pairs)
                for p, c in zip(members, mix):
                    choice[p] = c
                acyclic = is_acyclic(_pair_realization(s, choice))
                if len(set(mix)) > 1:
                    assert not acyclic, (gid, mix)
                elif not any(mix):
                    assert acyclic
            checked += 1
    assert checked >= 3


def test_reverse_index_arithmetic():
    rng = random.Random(2)
    for s in _random_sadgs(20, seed=2):
        b = tuple(rng.randint(0, 1) for _ in range(s.m_total))
        g = realize(s, b)
        for p in s.pairs:
            (i, k), (j, l) = p.forward
            sel = p.reverse if b[p.group] else p.forward
            assert sel in g.edges
            if b[p.group]:
                assert sel == ((j, l + 1), (i, k - 1))
                assert 0 <= k - 1 and l + 1 < len(g.chains[j])


def test_pairs_partition_inter_edges():
    for s in _random_sadgs(10, seed=3):
        full = compile_seadg_from(s)
        pairs, fixed = split_dependencies(full)
        assert {p.forward for p in pairs} | set(fixed) == full.inter_edges()
        assert sorted(p for g in s.groups for p in g) == list(range(len(s.pairs)))
        # groups never mix agent pairs
        for g in s.groups:
            assert len({(s.pairs[p].forward[0][0], s.pairs[p].forward[1][0]) for p in g}) == 1


def compile_seadg_from(s):
    return realize(s, s.zeros())


def test_switch_admissibility():
    sc, plan = junctions(1)
    s = compile_sadg(plan, sc.roadmap)
    st = dict(s.skeleton.status)
    assert switch_admissible(s, (0,), (0,), st)
    assert new_edges(s, (0,), (1,)) == {(("N0", 2), ("E0", 1))}
    # E0 delayed on its first vertex, N0 waiting at the centre: head E0_1 still staged
    g = realize(s, (0,), st)
    g.status = st
    mark_status(g, ("E0", 0), Status.IN_PROGRESS)
    mark_status(g, ("N0", 0), Status.IN_PROGRESS)
    mark_status(g, ("N0", 0), Status.COMPLETED)
    assert switch_admissible(s, (0,), (1,), st)
    # once E0 has started its second vertex the reverse edge would point at it
    mark_status(g, ("E0", 0), Status.COMPLETED)
    mark_status(g, ("E0", 1), Status.IN_PROGRESS)
    assert not switch_admissible(s, (0,), (1,), st)
    mark_status(g, ("E0", 1), Status.COMPLETED)
    assert not switch_admissible(s, (0,), (1,), st)


def test_as_vector():
    sc, plan = junctions(2)
    s = compile_sadg(plan, sc.roadmap)
    assert as_vector(s, {0: 1, 1: 0}) == (1, 0)
    with pytest.raises(KeyError):
        as_vector(s, {0: 1})
    with pytest.raises(KeyError):
        as_vector(s, (1,))
    with pytest.raises(ValueError):
        as_vector(s, (2, 0))
    assert "style=dotted" in sadg_to_dot(s, (1, 0))
