"""Random solver instances and oracle cross-checks (used by ``adgswitch verify``)."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .delays import DelayModel
from .harness import TEMPLATES, generate_map, sample_planned_scenario
from .mapf import PlanningError
from .optimizer import DurationModel, oracle_solve, solve
from .sadg import compile_sadg, realize, switch_admissible
from .seadg import SeAdg, Status, executable_vertices, is_acyclic
from .simulator import vertex_durations


@dataclass
class Instance:
    scenario: object
    plan: object
    sadg: object
    durations: DurationModel
    b_current: tuple
    status: dict
    now: float


def random_instance(seed: int, max_agents=8, dims=(5, 8), progress=None, switch_prob=0.3) -> Instance:
    """A plan partially executed under the execution policy with random admissible switches."""
    rng = random.Random(seed)
    while True:
        tpl = rng.choice(TEMPLATES)
        rm = generate_map(tpl, rng.randint(*dims))
        n = rng.randint(2, max_agents)
        try:
            sc, plan = sample_planned_scenario(rm, n, rng.randrange(1 << 30), DelayModel())
        except PlanningError:
            continue
        break
    s = compile_sadg(plan, rm)
    t_est = vertex_durations(s.skeleton, sc)
    t_est = {r: t * rng.uniform(0.5, 2.0) for r, t in t_est.items()}
    status = dict(s.skeleton.status)
    b = s.zeros()
    total = len(s.skeleton)
    steps = rng.randint(0, 2 * total) if progress is None else int(progress * 2 * total)
    for _ in range(steps):
        g = SeAdg(s.skeleton.chains, s.selected_edges(b), status)
        running = [r for r, st in status.items() if st == Status.IN_PROGRESS]
        ready = sorted(executable_vertices(g), key=str)
        if not running and not ready:
            break
        if ready and (not running or rng.random() < 0.5):
            status[rng.choice(ready)] = Status.IN_PROGRESS
        else:
            status[rng.choice(sorted(running, key=str))] = Status.COMPLETED
        if s.m_total and rng.random() < switch_prob:
            cand = list(b)
            gid = rng.randrange(s.m_total)
            cand[gid] = 1 - cand[gid]
            cand = tuple(cand)
            if switch_admissible(s, b, cand, status) and is_acyclic(realize(s, cand, status)):
                b = cand
    mu = {r: rng.random() for r, st in status.items() if st == Status.IN_PROGRESS}
    return Instance(sc, plan, s, DurationModel(t_est, mu), b, status, rng.uniform(0.0, 30.0))


def cross_check(inst: Instance, subset=None):
    """Branch-and-bound and exhaustive results for the same instance."""
    a = solve(inst.sadg, inst.durations, inst.b_current, subset, inst.now, inst.status)
    b = oracle_solve(inst.sadg, inst.durations, inst.b_current, subset, inst.now, inst.status)
    return a, b
