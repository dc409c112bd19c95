import json
import math

from adgswitch.delays import DelayModel
from adgswitch.harness import compute_improvement, generate_map, sample_planned_scenario
from adgswitch.mapf import MapfPlan
from adgswitch.roadmap import Agent, Scenario
from adgswitch.simulator import TICK, collision_monitor, motion_segments, run_episode, vertex_durations
from adgswitch.seadg import compile_seadg

from conftest import corridor, crossing_fixture, grid


def test_single_agent_completion_time():
    sc = Scenario(corridor(5), (Agent(0, 0, 4),))
    res = run_episode(sc, MapfPlan.from_vertices({0: [0, 1, 2, 3, 4]}), "rhc")
    assert res.success
    assert abs(res.completion[0] - 4.0) <= TICK + 1e-9


def test_rotation_time():
    segs, h = motion_segments([(0, 0), (1, 0), (1, 1)], 0.0, 1.0, 2.0)
    assert [s[0] for s in segs] == ["move", "rot", "move"]
    assert math.isclose(segs[1][1], (math.pi / 2) / 2.0)
    sc = Scenario(grid(2, 2), (Agent(0, 0, 3),), rotation_speed=2.0)
    plan = MapfPlan.from_vertices({0: [0, 1, 3]})
    d = vertex_durations(compile_seadg(plan, sc.roadmap), sc)
    assert math.isclose(sum(d.values()), 2 + math.pi / 4)


def test_no_delay_modes_agree_on_crossing():
    sc, plan = crossing_fixture()
    res = {m: run_episode(sc, plan, m) for m in ("adg", "shc", "rhc")}
    assert all(r.success for r in res.values())
    assert res["adg"].sum_t == res["shc"].sum_t == res["rhc"].sum_t


def test_monitor():
    assert collision_monitor({0: (0.0, 0.0), 1: (1.0, 0.0)}, 0.3) == []
    hits = collision_monitor({0: (0.0, 0.0), 1: (0.5, 0.0), 2: (3.0, 3.0)}, 0.3, t=1.5)
    assert len(hits) == 1
    assert hits[0].agents == (0, 1) and hits[0].poses == ((0.0, 0.0), (0.5, 0.0)) and hits[0].t == 1.5


def test_injected_overlap_fails_episode():
    sc, plan = crossing_fixture()

    def inject(tick, poses):
        if tick == 5:
            poses["B"] = poses["A"]

    res = run_episode(sc, plan, "rhc", inject=inject)
    assert not res.success and res.reason == "collision"
    assert res.collisions[0].agents in (("A", "B"), ("B", "A"))


def test_stall_and_velocity_episodes():
    rm = generate_map("half-maze", 7)
    for dm in (DelayModel("stall", period=4.0, fraction=0.3), DelayModel("velocity")):
        sc, plan = sample_planned_scenario(rm, 6, 11, dm)
        for mode in ("adg", "shc", "rhc"):
            res = run_episode(sc, plan, mode)
            assert res.success, (dm.kind, mode, res.reason)
            assert not res.collisions and math.isfinite(res.sum_t)


def test_full_stall_is_infinite():
    rm = generate_map("warehouse", 6)
    sc, plan = sample_planned_scenario(rm, 4, 2, DelayModel("stall", period=5.0, fraction=1.0))
    res = run_episode(sc, plan, "rhc")
    assert not res.success and math.isinf(res.sum_t)


def test_deterministic_log_and_json():
    rm = generate_map("warehouse", 7)
    sc, plan = sample_planned_scenario(rm, 6, 5, DelayModel("stall", period=6.0, fraction=0.3))
    a = run_episode(sc, plan, "rhc")
    b = run_episode(sc, plan, "rhc")
    assert a.events_jsonl() == b.events_jsonl()
    assert a.sum_t == b.sum_t
    d = json.loads(a.to_json())
    assert d["mode"] == "rhc" and d["success"] is True
    assert all(json.loads(line)["type"] in ("status", "solve", "grant") for line in a.events_jsonl().splitlines())


def test_paired_improvement_mostly_nonnegative():
    """Realized dominance is expected, not guaranteed: the optimizer does not
    foresee stalls. Dips below -1 % are flagged, and must stay rare."""
    rm = generate_map("warehouse", 9)
    flagged, imps = [], []
    for seed in range(1, 51):
        sc, plan = sample_planned_scenario(rm, 10, seed, DelayModel("stall", period=10.0, fraction=0.2))
        base = run_episode(sc, plan, "adg")
        ours = run_episode(sc, plan, "rhc")
        assert base.success and ours.success
        imp = compute_improvement(base.sum_t, ours.sum_t)
        imps.append(imp)
        if imp < -1.0:
            flagged.append((seed, round(imp, 2)))
    print(f"flagged seeds (improvement < -1%): {flagged}")
    assert sum(imps) / len(imps) > 0
    assert len(flagged) <= 5
