"""Fixed-tick fleet simulation with an independent geometric collision monitor.

AGVs are constant-speed differential-drive points carrying a disc footprint:
each movement first turns in place towards the next roadmap vertex, then drives
straight to it. A granted SE-ADG vertex is executed segment by segment; the
AGV reports ``start``/``complete`` events and its progress to the controller.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .controller import Controller, ControllerFault, Event, Mode
from .delays import DelaySampler
from .optimizer import EPS, NODE_BUDGET, DurationModel
from .sadg import compile_sadg

TICK = 0.1


def _heading(p, q):
    return math.atan2(q[1] - p[1], q[0] - p[0])


def _turn(a, b):
    d = abs(b - a) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def motion_segments(path_xy, heading, speed, rot_speed):
    """Segments ``(kind, duration, a, b)`` for a polyline; returns them and the final heading.

    ``kind`` is ``rot`` (a, b headings; position fixed at path start) or
    ``move`` (a, b positions).
    """
    segs = []
    for p, q in zip(path_xy, path_xy[1:]):
        h = _heading(p, q)
        if heading is not None:
            ang = _turn(heading, h)
            if ang > 1e-9:
                segs.append(("rot", ang / rot_speed, p, p))
        heading = h
        segs.append(("move", math.hypot(q[0] - p[0], q[1] - p[1]) / speed, p, q))
    return segs, heading


def _initial_heading(chain, roadmap):
    for v in chain:
        path = v.path()
        if len(path) > 1:
            return _heading(roadmap.loc[path[0]], roadmap.loc[path[1]])
    return None


def vertex_durations(g, sc) -> dict:
    """Nominal execution time of every vertex, rotations included."""
    out = {}
    for a in g.agents:
        chain = g.chains[a]
        heading = _initial_heading(chain, sc.roadmap)
        for v in chain:
            xy = [sc.roadmap.loc[x] for x in v.path()]
            segs, heading = motion_segments(xy, heading, sc.nominal_speed, sc.rotation_speed)
            out[v.ref] = sum(s[1] for s in segs)
    return out


@dataclass
class AgvState:
    agent: object
    index: int
    pos: tuple
    heading: float | None
    next_k: int = 0
    active: tuple | None = None
    segments: list = field(default_factory=list)
    seg_i: int = 0
    seg_t: float = 0.0
    done_t: float = 0.0  # time spent on the active vertex so far
    total_t: float = 0.0
    finished: bool = False
    completion_time: float = 0.0


@dataclass
class Collision:
    t: float
    agents: tuple
    poses: tuple

    def to_dict(self):
        return {"t": self.t, "agents": list(self.agents), "poses": [list(p) for p in self.poses]}


def collision_monitor(poses: dict, radius: float, t: float = 0.0) -> list:
    """Pairs of AGVs whose footprint discs overlap; empty list means pass."""
    out = []
    items = list(poses.items())
    lim = 2.0 * radius - 1e-9
    for n, (a, p) in enumerate(items):
        for b, q in items[n + 1:]:
            if abs(p[0] - q[0]) < lim and abs(p[1] - q[1]) < lim and math.hypot(p[0] - q[0], p[1] - q[1]) < lim:
                out.append(Collision(t, (a, b), (tuple(p), tuple(q))))
    return out


@dataclass
class EpisodeResult:
    mode: str
    success: bool
    reason: str
    completion: dict
    sum_t: float
    makespan_nominal: float
    sim_time: float
    collisions: list
    events: list
    solves: list
    b_final: tuple = ()

    @property
    def solve_times(self) -> list:
        return [s["wall_time"] for s in self.solves]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "success": self.success, "reason": self.reason,
            "completion": {str(a): t for a, t in self.completion.items()},
            "sum_t": self.sum_t, "makespan_nominal": self.makespan_nominal,
            "sim_time": self.sim_time,
            "collisions": [c.to_dict() for c in self.collisions],
            "solves": self.solves, "b_final": list(self.b_final),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e) + "\n" for e in self.events)


def run_episode(sc, plan, mode=Mode.RHC, seed=None, dt=TICK, bound_factor=10.0, horizon=None,
                period=None, sadg=None, eps=EPS, node_budget=NODE_BUDGET, check_every_step=True,
                inject=None, mu_estimator="elapsed") -> EpisodeResult:
    """Simulate the fleet executing ``plan`` under ``mode`` until every AGV is home.

    ``inject`` is a test hook called as ``inject(tick, poses)`` that may edit
    the pose dict handed to the collision monitor.
    """
    mode = Mode(mode)
    seed = sc.seed if seed is None else seed
    horizon = sc.horizon if horizon is None else horizon
    period = sc.control_period if period is None else period
    sadg = compile_sadg(plan, sc.roadmap) if sadg is None else sadg
    g = sadg.skeleton
    t_est = vertex_durations(g, sc)
    ctrl = Controller(sadg, DurationModel(t_est), mode, period, horizon, eps, node_budget, check_every_step,
                      mu_estimator)

    makespan = max((sum(t_est[v.ref] for v in g.chains[a]) for a in g.agents), default=0.0)
    bound = bound_factor * makespan
    sampler = DelaySampler(sc.delay_model, sc.n_agents, seed)
    factors = sampler.velocity_factors(g.refs())
    roadmap = sc.roadmap

    agvs = []
    for n, ag in enumerate(sc.agents):
        chain = g.chains[ag.id]
        st = AgvState(ag.id, n, roadmap.loc[ag.start], _initial_heading(chain, roadmap))
        if not chain:
            st.finished = True
        agvs.append(st)

    collisions = []
    grants = ctrl.step([], 0.0)
    tick = 0
    reason = "ok"
    # the bound clock pauses while an unfinished AGV is forcibly stalled, so
    # long stall cascades are not mistaken for deadlock
    clock = 0.0
    dm = sc.delay_model
    if dm.kind == "stall" and math.ceil(dm.fraction * sc.n_agents - 1e-9) >= sc.n_agents and g.agents:
        reason = "all agents stalled indefinitely"
    while reason == "ok" and not all(a.finished for a in agvs):
        t = tick * dt
        if clock > bound:
            reason = "step bound exceeded"
            break
        stalls = {a.index: sampler.stalled(a.index, t) for a in agvs if not a.finished}
        if not any(stalls.values()):
            clock += dt
        events = []
        for agv in agvs:
            if agv.finished:
                continue
            stalled = stalls[agv.index]
            if agv.active is None:
                ref = (agv.agent, agv.next_k)
                if ref not in grants or stalled:
                    continue
                v = g.vertex(ref)
                f = factors[ref]
                xy = [roadmap.loc[x] for x in v.path()]
                segs, _ = motion_segments(xy, agv.heading, sc.nominal_speed * f, sc.rotation_speed * f)
                agv.active, agv.segments, agv.seg_i, agv.seg_t = ref, segs, 0, 0.0
                agv.done_t, agv.total_t = 0.0, sum(s[1] for s in segs)
                events.append(Event("start", ref))
            if stalled:
                events.append(Event("progress", agv.active, agv.done_t / agv.total_t if agv.total_t else 1.0))
                continue
            budget = dt
            while budget > 1e-12 and agv.seg_i < len(agv.segments):
                kind, dur, a, b = agv.segments[agv.seg_i]
                use = min(budget, dur - agv.seg_t)
                agv.seg_t += use
                agv.done_t += use
                budget -= use
                frac = agv.seg_t / dur if dur > 0 else 1.0
                if kind == "move":
                    agv.pos = (a[0] + (b[0] - a[0]) * frac, a[1] + (b[1] - a[1]) * frac)
                    agv.heading = _heading(a, b)
                if agv.seg_t >= dur - 1e-12:
                    if kind == "move":
                        agv.pos = b
                    agv.seg_i += 1
                    agv.seg_t = 0.0
            if agv.seg_i >= len(agv.segments):
                events.append(Event("complete", agv.active))
                agv.active = None
                agv.next_k += 1
                if agv.next_k >= len(g.chains[agv.agent]):
                    agv.finished = True
                    agv.completion_time = t + (dt - budget)
            else:
                events.append(Event("progress", agv.active, agv.done_t / agv.total_t if agv.total_t else 1.0))
        poses = {a.agent: a.pos for a in agvs}
        if inject is not None:
            inject(tick, poses)
        collisions.extend(collision_monitor(poses, roadmap.footprint_radius, round(t + dt, 6)))
        try:
            grants = ctrl.step(events, dt)
        except ControllerFault as e:
            reason = f"controller fault: {e}"
            break
        tick += 1
        waiting = [a for a in agvs if not a.finished]
        if waiting and all(a.active is None and (a.agent, a.next_k) not in grants for a in waiting):
            reason = "deadlock"
            break

    done = all(a.finished for a in agvs)
    completion = {a.agent: a.completion_time for a in agvs}
    success = done and not collisions and reason == "ok"
    if collisions and reason == "ok":
        reason = "collision"
    return EpisodeResult(
        str(mode), success, reason, completion,
        math.fsum(completion.values()) if done else math.inf,
        makespan, tick * dt, collisions, ctrl.log, ctrl.solves, ctrl.b_active,
    )
