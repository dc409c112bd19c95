"""Roadmap graph, scenario files and the spatial-exclusivity predicate."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .delays import DelayModel

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Raised for malformed scenario files or violated scenario invariants."""


@dataclass(frozen=True)
class Roadmap:
    vertices: tuple  # ((id, x, y), ...)
    edges: tuple  # ((a, b), ...), undirected
    footprint_radius: float
    loc: dict = field(init=False, repr=False, compare=False)
    adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        verts = tuple((v, float(x), float(y)) for v, x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        loc = {}
        for v, x, y in verts:
            if v in loc:
                raise ScenarioError(f"duplicate vertex id {v!r}")
            loc[v] = (x, y)
        adj = {v: [] for v in loc}
        seen = set()
        edges = []
        for a, b in self.edges:
            if a not in loc or b not in loc:
                raise ScenarioError(f"edge ({a!r}, {b!r}) references an unknown vertex")
            if a == b:
                raise ScenarioError(f"self-loop edge at vertex {a!r}")
            key = frozenset((a, b))
            if key in seen:
                continue
            seen.add(key)
            edges.append((a, b))
            adj[a].append(b)
            adj[b].append(a)
        if not self.footprint_radius > 0:
            raise ScenarioError(f"footprint_radius must be positive, got {self.footprint_radius}")
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "footprint_radius", float(self.footprint_radius))
        object.__setattr__(self, "loc", loc)
        object.__setattr__(self, "adj", {v: tuple(n) for v, n in adj.items()})

    def __len__(self):
        return len(self.vertices)

    def adjacent(self, a, b) -> bool:
        return b in self.adj[a]

    def distance(self, a, b) -> float:
        (xa, ya), (xb, yb) = self.loc[a], self.loc[b]
        return math.hypot(xa - xb, ya - yb)

    def is_connected(self) -> bool:
        if not self.loc:
            return True
        start = self.vertices[0][0]
        seen = {start}
        stack = [start]
        while stack:
            for n in self.adj[stack.pop()]:
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return len(seen) == len(self.loc)

    def to_dict(self) -> dict:
        return {
            "vertices": [[v, x, y] for v, x, y in self.vertices],
            "edges": [[a, b] for a, b in self.edges],
            "footprint_radius": self.footprint_radius,
        }


def spatially_exclusive(a, b, r: Roadmap) -> bool:
    """True iff footprint discs centred on ``a`` and ``b`` do not intersect."""
    if a not in r.loc or b not in r.loc:
        missing = a if a not in r.loc else b
        raise KeyError(f"unknown vertex {missing!r}")
    return r.distance(a, b) > 2.0 * r.footprint_radius


@dataclass(frozen=True)
class Agent:
    id: object
    start: object
    goal: object


@dataclass(frozen=True)
class Scenario:
    roadmap: Roadmap
    agents: tuple
    nominal_speed: float = 1.0
    rotation_speed: float = 3.0
    control_period: float = 2.0
    horizon: float = 5.0
    delay_model: DelayModel = DelayModel()
    seed: int = 0
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        agents = tuple(a if isinstance(a, Agent) else Agent(*a) for a in self.agents)
        object.__setattr__(self, "agents", agents)
        ids, starts, goals = set(), set(), set()
        for a in agents:
            if a.id in ids:
                raise ScenarioError(f"duplicate agent id {a.id!r}")
            for v, what in ((a.start, "start"), (a.goal, "goal")):
                if v not in self.roadmap.loc:
                    raise ScenarioError(f"agent {a.id!r}: {what} vertex {v!r} not in roadmap")
            if a.start in starts:
                raise ScenarioError(f"duplicate start vertex {a.start!r} (agent {a.id!r})")
            if a.goal in goals:
                raise ScenarioError(f"duplicate goal vertex {a.goal!r} (agent {a.id!r})")
            ids.add(a.id)
            starts.add(a.start)
            goals.add(a.goal)
        for name in ("nominal_speed", "rotation_speed", "control_period", "horizon"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be positive")
        warns = []
        if len(self.roadmap) <= len(agents):
            warns.append(
                f"roadmap has {len(self.roadmap)} vertices for {len(agents)} agents; "
                "an acyclic dependency graph is not guaranteed"
            )
            log.warning(warns[-1])
        object.__setattr__(self, "warnings", tuple(warns))

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def agent_ids(self) -> list:
        return [a.id for a in self.agents]

    def agent(self, agent_id) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    def to_dict(self) -> dict:
        return {
            "roadmap": self.roadmap.to_dict(),
            "agents": [{"id": a.id, "start": a.start, "goal": a.goal} for a in self.agents],
            "nominal_speed": self.nominal_speed,
            "rotation_speed": self.rotation_speed,
            "control_period": self.control_period,
            "horizon": self.horizon,
            "delay_model": self.delay_model.to_dict(),
            "seed": self.seed,
        }


def _require(d: dict, key: str, ctx: str):
    if not isinstance(d, dict) or key not in d:
        raise ScenarioError(f"{ctx}: missing field {key!r}")
    return d[key]


def scenario_from_dict(d: dict) -> Scenario:
    rm = _require(d, "roadmap", "scenario")
    verts = []
    for n, entry in enumerate(_require(rm, "vertices", "roadmap")):
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise ScenarioError(f"roadmap.vertices[{n}]: expected [id, x, y], got {entry!r}")
        verts.append(tuple(entry))
    edges = []
    for n, entry in enumerate(_require(rm, "edges", "roadmap")):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ScenarioError(f"roadmap.edges[{n}]: expected [a, b], got {entry!r}")
        edges.append(tuple(entry))
    roadmap = Roadmap(tuple(verts), tuple(edges), _require(rm, "footprint_radius", "roadmap"))
    agents = []
    for n, a in enumerate(_require(d, "agents", "scenario")):
        ctx = f"agents[{n}]"
        agents.append(Agent(_require(a, "id", ctx), _require(a, "start", ctx), _require(a, "goal", ctx)))
    try:
        delay = DelayModel.from_dict(d.get("delay_model"))
    except (TypeError, ValueError) as e:
        raise ScenarioError(f"delay_model: {e}") from e
    kw = {}
    for key, name in (
        ("nominal_speed", "nominal_speed"),
        ("rotation_speed", "rotation_speed"),
        ("control_period", "control_period"),
        ("horizon", "horizon"),
    ):
        if key in d:
            kw[name] = float(d[key])
    return Scenario(roadmap, tuple(agents), delay_model=delay, seed=int(d.get("seed", 0)), **kw)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return scenario_from_dict(d)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(sc.to_dict(), indent=1))
