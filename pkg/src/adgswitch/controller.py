"""Feedback loop: track progress, re-optimize every control period, publish grants."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .horizon import extract_subset
from .optimizer import EPS, NODE_BUDGET, DurationModel, earliest_schedule, frozen_groups, solve
from .sadg import Sadg, as_vector, switch_admissible
from .seadg import ExecutionError, SeAdg, Status, executable_vertices, is_acyclic, mark_status


class Mode(str, Enum):
    ADG = "adg"  # static graph, b stays zero
    SHC = "shc"  # shrinking horizon: optimize over the whole remaining plan
    RHC = "rhc"  # receding horizon: optimize over the finite-horizon subset

    def __str__(self):
        return self.value


class ControllerFault(RuntimeError):
    """An invariant broke; continuing would void the safety guarantees."""


@dataclass(frozen=True)
class Event:
    kind: str  # start | complete | progress
    ref: tuple
    value: float = 0.0  # fraction of the vertex already done (progress events)


def _ref_json(ref):
    return [ref[0], ref[1]]


class Controller:
    def __init__(self, sadg: Sadg, durations: DurationModel, mode=Mode.RHC, period=2.0, horizon=5.0,
                 eps=EPS, node_budget=NODE_BUDGET, check_every_step=True, mu_estimator="elapsed"):
        if mu_estimator not in ("elapsed", "progress"):
            raise ValueError(f"unknown mu estimator {mu_estimator!r}")
        self.sadg = sadg
        self.durations = DurationModel(dict(durations.t_est), {})
        self.mode = Mode(mode)
        self.period = period
        self.horizon = horizon
        self.eps = eps
        self.node_budget = node_budget
        self.check_every_step = check_every_step
        # elapsed: remaining fraction = 1 - (now - start) / T_est, clamped;
        # progress: taken from the AGV's own progress reports
        self.mu_estimator = mu_estimator
        self._started = {}
        self.status = dict(sadg.skeleton.status)
        self.b_active = sadg.zeros()
        self.active_graph = self._realize(self.b_active)
        self.now = 0.0
        self.last_solve_time = 0.0
        self.last_solve = None
        self.solves = []  # per-solve metrics including wall time
        self.log = []  # deterministic event log
        self._granted = set()
        if not is_acyclic(self.active_graph):
            raise ControllerFault("initial dependency graph is cyclic")

    def _realize(self, b) -> SeAdg:
        return SeAdg(self.sadg.skeleton.chains, self.sadg.selected_edges(b), self.status)

    def freeze_inadmissible(self) -> set:
        return frozen_groups(self.sadg, self.b_active, self.status)

    def apply(self, ev: Event):
        if ev.kind == "progress":
            if self.mu_estimator == "progress":
                self.durations.mu[ev.ref] = 1.0 - min(1.0, max(0.0, ev.value))
            return
        new = {"start": Status.IN_PROGRESS, "complete": Status.COMPLETED}.get(ev.kind)
        if new is None:
            raise ControllerFault(f"unknown event kind {ev.kind!r}")
        try:
            mark_status(self.active_graph, ev.ref, new)
        except ExecutionError as e:
            raise ControllerFault(f"t={self.now:.3f}: {e}") from e
        if new == Status.IN_PROGRESS:
            self.durations.mu[ev.ref] = 1.0
            self._started[ev.ref] = self.now
        else:
            self.durations.mu.pop(ev.ref, None)
            self._started.pop(ev.ref, None)
        self.log.append({"t": round(self.now, 6), "type": "status", "ref": _ref_json(ev.ref), "status": str(new)})

    def step(self, events=(), dt: float = 0.0) -> set:
        """Apply status events, advance the clock, maybe re-solve, return the grant set."""
        for ev in events:
            self.apply(ev)
        self.now += dt
        if self.mode != Mode.ADG and self.now - self.last_solve_time >= self.period - 1e-9:
            self._solve()
            self.last_solve_time = self.now
        if self.check_every_step and not is_acyclic(self.active_graph):
            raise ControllerFault(f"t={self.now:.3f}: active graph became cyclic")
        grants = executable_vertices(self.active_graph)
        fresh = grants - self._granted
        if fresh:
            self.log.append({
                "t": round(self.now, 6), "type": "grant",
                "refs": [_ref_json(r) for r in sorted(fresh, key=str)],
            })
        self._granted = grants
        return grants

    def _update_mu(self):
        if self.mu_estimator != "elapsed":
            return
        for ref, t0 in self._started.items():
            est = self.durations.t_est[ref]
            done = (self.now - t0) / est if est > 0 else 1.0
            self.durations.mu[ref] = 1.0 - min(1.0, max(0.0, done))

    def _solve(self):
        self._update_mu()
        subset = None
        if self.mode == Mode.RHC:
            estimates = earliest_schedule(self.active_graph, self.durations, self.now, self.eps)
            subset = extract_subset(self.sadg, estimates, self.horizon, self.now, self.b_active, self.status)
        res = solve(self.sadg, self.durations, self.b_active, subset, self.now, self.status,
                    self.eps, self.node_budget)
        b_star = as_vector(self.sadg, res.b_star)
        switched = [g for g in range(self.sadg.m_total) if b_star[g] != self.b_active[g]]
        if switched:
            if not switch_admissible(self.sadg, self.b_active, b_star, self.status):
                raise ControllerFault(f"t={self.now:.3f}: optimizer proposed an inadmissible switch")
            candidate = self._realize(b_star)
            if not is_acyclic(candidate):
                raise ControllerFault(f"t={self.now:.3f}: optimizer returned a cyclic realization")
            self.b_active = b_star
            self.active_graph = candidate
        self.last_solve = res
        self.solves.append({
            "t": self.now, "free": len(res.free_groups), "frozen": len(res.frozen_groups),
            "cost_before": res.cost_before, "cost_after": res.cost, "nodes": res.nodes_explored,
            "wall_time": res.wall_time, "exhausted": res.exhausted,
            "subset_size": None if subset is None else len(subset.vertices),
        })
        self.log.append({
            "t": round(self.now, 6), "type": "solve", "mode": str(self.mode),
            "free": len(res.free_groups), "frozen": len(res.frozen_groups),
            "cost_before": round(res.cost_before, 6), "cost_after": round(res.cost, 6),
            "nodes": res.nodes_explored, "switched": switched, "exhausted": res.exhausted,
        })

    def write_log(self, path):
        with open(path, "w") as fh:
            for rec in self.log:
                fh.write(json.dumps(rec) + "\n")
