import random

import pytest

from adgswitch.harness import TEMPLATES, generate_map, sample_planned_scenario
from adgswitch.mapf import MapfPlan
from adgswitch.roadmap import spatially_exclusive
from adgswitch.seadg import (
    ExecutionError, InvalidPlanError, SeAdg, Status, compile_seadg, executable_vertices, is_acyclic,
    is_executable, mark_status, to_dot,
)

from conftest import corridor, grid, junctions


def literal_inter_edges(chains):
    """Stage two written as the four nested loops, no indexing tricks."""
    out = set()
    agents = list(chains)
    for i in agents:
        for vi in chains[i]:
            for j in agents:
                if i == j:
                    continue
                for vj in chains[j]:
                    if vi.tuples[0].vertex == vj.tuples[-1].vertex and vi.tuples[-1].time <= vj.tuples[-1].time:
                        out.add((vi.ref, vj.ref))
    return out


def test_straight_single_agent():
    rm = corridor(3)
    g = compile_seadg(MapfPlan.from_vertices({0: [0, 1, 2]}), rm)
    assert len(g) == 2
    assert g.edges == {((0, 0), (0, 1))}
    assert not g.inter_edges()


def test_waits_merged():
    rm = corridor(4)
    g = compile_seadg(MapfPlan.from_vertices({0: [0, 1, 1, 1, 2, 3, 3]}), rm)
    chain = g.chains[0]
    assert all(v.start_vertex != v.goal_vertex for v in chain)
    assert [v.path() for v in chain] == [[0, 1], [1, 2], [2, 3]]
    # every tuple is kept, boundary tuples are shared
    assert sum(len(v.tuples) for v in chain) == 7 + len(chain) - 1


def test_non_exclusive_steps_merged():
    # footprint 0.6 on a unit corridor: neighbours overlap, so segments span two steps
    rm = grid(5, 1, r=0.6)
    g = compile_seadg(MapfPlan.from_vertices({0: [0, 1, 2, 3, 4]}), rm)
    for v in g.chains[0]:
        assert spatially_exclusive(v.start_vertex, v.goal_vertex, rm)
    assert [v.path() for v in g.chains[0]] == [[0, 1, 2], [2, 3, 4]]


def test_shared_corridor_one_edge():
    rm = corridor(5)
    # agent 1 follows agent 0 down the corridor one step behind
    plan = MapfPlan.from_vertices({0: [1, 2, 3, 4], 1: [0, 0, 1, 2]})
    g = compile_seadg(plan, rm)
    assert g.inter_edges() == literal_inter_edges(g.chains)
    # each corridor vertex agent 1 enters was left by agent 0 first
    for (u, v) in g.inter_edges():
        assert u[0] == 0 and v[0] == 1
        assert g.vertex(u).start_vertex == g.vertex(v).goal_vertex


def test_crossing_edges(crossing):
    sc, plan = crossing
    g = compile_seadg(plan, sc.roadmap)
    expected = {(("A", 1), ("D", 1)), (("A", 2), ("B", 1)), (("B", 1), ("C", 1)), (("D", 3), ("C", 2))}
    assert g.inter_edges() == expected == literal_inter_edges(g.chains)
    assert is_acyclic(g)


@pytest.mark.parametrize("seed", range(12))
def test_hash_join_matches_literal_loops(seed):
    rng = random.Random(seed)
    rm = generate_map(TEMPLATES[seed % 4], rng.randint(5, 8))
    sc, plan = sample_planned_scenario(rm, rng.randint(2, 8), seed)
    g = compile_seadg(plan, rm)
    assert g.inter_edges() == literal_inter_edges(g.chains)


def test_invalid_plan_rejected():
    rm = corridor(3)
    with pytest.raises(InvalidPlanError):
        compile_seadg(MapfPlan.from_vertices({0: [0, 1], 1: [1, 0]}), rm)


def test_acyclicity_trivial():
    assert is_acyclic(SeAdg({}, set()))
    g = compile_seadg(MapfPlan.from_vertices({0: [0, 1], 1: [2, 3]}), grid(4, 1))
    cyc = g.with_edges({((0, 0), (1, 0)), ((1, 0), (0, 0))})
    assert not is_acyclic(cyc)


def test_execution_policy():
    sc, plan = junctions(1)
    g = compile_seadg(plan, sc.roadmap)
    # fresh graph: both first vertices have no inbound edges
    assert executable_vertices(g) == {("E0", 0), ("N0", 0)}
    mark_status(g, ("N0", 0), Status.IN_PROGRESS)
    mark_status(g, ("N0", 0), Status.COMPLETED)
    # N0's entry into the centre waits for E0 to leave it
    assert not is_executable(g, ("N0", 1))
    for k in range(2):
        mark_status(g, ("E0", k), Status.IN_PROGRESS)
        mark_status(g, ("E0", k), Status.COMPLETED)
    mark_status(g, ("E0", 2), Status.IN_PROGRESS)
    assert not is_executable(g, ("N0", 1))  # tail only in progress
    with pytest.raises(ExecutionError, match="blocked"):
        mark_status(g, ("N0", 1), Status.IN_PROGRESS)
    mark_status(g, ("E0", 2), Status.COMPLETED)
    assert is_executable(g, ("N0", 1))
    with pytest.raises(ExecutionError):
        mark_status(g, ("E0", 2), Status.STAGED)
    with pytest.raises(ExecutionError):
        mark_status(g, ("E0", 3), Status.COMPLETED)
    # out-of-order start within one chain
    with pytest.raises(ExecutionError):
        mark_status(g, ("N0", 2), Status.IN_PROGRESS)


def test_dot_export(crossing):
    sc, plan = crossing
    text = to_dot(compile_seadg(plan, sc.roadmap), dotted=[(("A", 0), ("B", 0))])
    assert text.startswith("digraph")
    assert '"A_2" -> "B_1"' in text
    assert "style=dotted" in text


def test_single_shared_vertex_one_edge():
    sc, plan = junctions(1)
    g = compile_seadg(plan, sc.roadmap)
    # E0 leaves the centre with its third vertex, N0 enters it with its second
    assert g.inter_edges() == {(("E0", 2), ("N0", 1))} == literal_inter_edges(g.chains)
