"""Map templates, scenario sampling, paired experiments and the improvement metric."""
from __future__ import annotations

import csv
import io
import json
import math
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .delays import DelayModel
from .mapf import PlanningError, plan_with_restarts
from .roadmap import Agent, Roadmap, Scenario
from .simulator import run_episode

TEMPLATES = ("warehouse", "full-maze", "half-maze", "islands")


def compute_improvement(base: float, ours: float) -> float:
    """Percentage reduction of cumulative completion time relative to ``base``."""
    if not base > 0:
        raise ValueError(f"baseline cumulative time must be positive, got {base}")
    return (base - ours) / base * 100.0


def _grid_edges(rows, cols, keep):
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols and keep((r, c), (r, c + 1)):
                edges.append((r * cols + c, r * cols + c + 1))
            if r + 1 < rows and keep((r, c), (r + 1, c)):
                edges.append((r * cols + c, (r + 1) * cols + c))
    return edges


def generate_map(template: str, rows: int = 9, cols: int | None = None, footprint_radius: float = 0.3) -> Roadmap:
    """Unit-spaced grid roadmap; templates differ only in which edges exist.

    warehouse: full 4-connected grid. half-maze: every row is a corridor, rows
    are linked on every other column. full-maze: rows linked only every fourth
    column and on the borders. islands: 3x3 blocks joined by single bridges.
    """
    cols = rows if cols is None else cols
    if not (3 <= rows <= 60 and 3 <= cols <= 60):
        raise ValueError(f"unsupported dimensions {rows}x{cols}")
    if template == "warehouse":
        keep = lambda a, b: True  # noqa: E731
    elif template == "half-maze":
        keep = lambda a, b: a[0] == b[0] or a[1] % 2 == 0 or a[1] == cols - 1  # noqa: E731
    elif template == "full-maze":
        keep = lambda a, b: a[0] == b[0] or a[1] % 4 == 0 or a[1] == cols - 1  # noqa: E731
    elif template == "islands":
        def keep(a, b):
            if a[0] // 3 == b[0] // 3 and a[1] // 3 == b[1] // 3:
                return True
            # bridge between neighbouring blocks through the block's middle line
            if a[0] == b[0]:
                return a[0] % 3 == 1 or a[0] == rows - 1 and rows % 3 == 1
            return a[1] % 3 == 1 or a[1] == cols - 1 and cols % 3 == 1
    else:
        raise ValueError(f"unknown template {template!r}")
    verts = [(r * cols + c, float(c), float(r)) for r in range(rows) for c in range(cols)]
    rm = Roadmap(tuple(verts), tuple(_grid_edges(rows, cols, keep)), footprint_radius)
    assert rm.is_connected(), template
    return rm


def random_scenario(roadmap: Roadmap, n_agents: int, seed: int, delay_model=DelayModel(), **kw) -> Scenario:
    rng = np.random.default_rng(seed)
    ids = [v for v, _, _ in roadmap.vertices]
    starts = rng.choice(len(ids), size=n_agents, replace=False)
    goals = rng.choice(len(ids), size=n_agents, replace=False)
    agents = tuple(Agent(n, ids[int(s)], ids[int(g)]) for n, (s, g) in enumerate(zip(starts, goals)))
    return Scenario(roadmap, agents, delay_model=delay_model, seed=seed, **kw)


def sample_planned_scenario(roadmap, n_agents, seed, delay_model=DelayModel(), attempts=20, **kw):
    """Draw scenarios until prioritized planning yields an acyclic plan."""
    last = None
    for k in range(attempts):
        sc = random_scenario(roadmap, n_agents, episode_seed(seed, "resample", k), delay_model, **kw)
        sc = replace(sc, seed=seed)
        try:
            return sc, plan_with_restarts(sc, seed=seed)
        except PlanningError as e:
            last = e
    raise last


def episode_seed(base: int, *key) -> int:
    """Stable per-cell seed: base xor crc32 of the cell key."""
    return (int(base) ^ zlib.crc32(repr(key).encode())) & 0x7FFFFFFF


@dataclass
class ExperimentSpec:
    maps: tuple = ("warehouse",)
    dims: int = 9
    fleet_sizes: tuple = (10,)
    delay_kind: str = "stall"
    delays: tuple = (10.0,)  # stall period (s); ignored for velocity delays
    fractions: tuple = (0.2,)
    modes: tuple = ("adg", "rhc")
    repetitions: int = 1
    seed_base: int = 0
    horizon: float = 5.0
    period: float = 2.0
    footprint_radius: float = 0.3
    output_dir: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if len(self.modes) < 2:
            raise ValueError("need a baseline mode and at least one compared mode")

    def cells(self):
        for m in self.maps:
            for n in self.fleet_sizes:
                for d in self.delays:
                    for f in self.fractions:
                        yield (m, n, float(d), float(f))


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def csv_text(self) -> str:
        return rows_to_csv(self.rows)


CSV_FIELDS = (
    "map", "agents", "delay", "fraction", "rep", "seed", "mode", "success", "reason",
    "sum_t", "baseline_sum_t", "improvement", "plan_time_steps", "n_groups", "solves",
    "switches", "solve_nodes",
)
# wall-clock columns live in their own file so episodes.csv stays byte-reproducible
TIMING_FIELDS = ("map", "agents", "delay", "fraction", "rep", "mode", "solves", "solve_p50", "solve_p95", "solve_max")


def rows_to_csv(rows, fields=CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in fields})
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "inf" if math.isinf(x) else ("nan" if math.isnan(x) else f"{x:.6f}")
    return "" if x is None else x


def summarize(rows) -> list:
    """Mean and sample standard deviation of improvement per (cell, mode)."""
    cells = {}
    for r in rows:
        key = (r["map"], r["agents"], r["delay"], r["fraction"], r["mode"])
        cells.setdefault(key, []).append(r)
    out = []
    for key in sorted(cells, key=str):
        rs = cells[key]
        imp = [r["improvement"] for r in rs if r.get("improvement") is not None]
        p95 = [r["solve_p95"] for r in rs if r.get("solve_p95") is not None]
        out.append({
            "map": key[0], "agents": key[1], "delay": key[2], "fraction": key[3], "mode": key[4],
            "episodes": len(rs), "paired": len(imp),
            # rows read back from CSV carry the flag as text
            "failures": sum(1 for r in rs if str(r["success"]) != "True"),
            "improvement_mean": float(np.mean(imp)) if imp else math.nan,
            "improvement_std": float(np.std(imp, ddof=1)) if len(imp) > 1 else 0.0,
            "solve_p95_max": max(p95) if p95 else None,
        })
    return out


def _percentile(xs, q):
    return float(np.percentile(xs, q)) if xs else None


def run_cell(spec: ExperimentSpec, cell, rep) -> list:
    """Paired episodes for one cell/repetition: same plan and delay seed for every mode."""
    m, n, d, f = cell
    seed = episode_seed(spec.seed_base, m, n, d, f, rep)
    rm = generate_map(m, spec.dims, footprint_radius=spec.footprint_radius)
    if spec.delay_kind == "stall":
        dm = DelayModel("stall", period=d, fraction=f)
    elif spec.delay_kind == "velocity":
        dm = DelayModel("velocity")
    else:
        dm = DelayModel()
    base = {"map": m, "agents": n, "delay": d, "fraction": f, "rep": rep, "seed": seed}
    try:
        sc, plan = sample_planned_scenario(rm, n, seed, dm, horizon=spec.horizon, control_period=spec.period)
    except PlanningError as e:
        return [dict(base, mode=mode, success=False, reason=f"planning failed: {e}") for mode in spec.modes]
    from .sadg import compile_sadg

    sadg = compile_sadg(plan, sc.roadmap)
    rows = []
    results = {}
    for mode in spec.modes:
        res = run_episode(sc, plan, mode, seed=seed, sadg=sadg)
        results[mode] = res
        st = res.solve_times
        rows.append(dict(
            base, mode=mode, success=res.success, reason=res.reason, sum_t=res.sum_t,
            plan_time_steps=plan.makespan(), n_groups=sadg.m_total, solves=len(st),
            switches=sum(1 for e in res.events if e["type"] == "solve" and e["switched"]),
            solve_nodes=sum(x["nodes"] for x in res.solves),
            solve_p50=_percentile(st, 50), solve_p95=_percentile(st, 95), solve_max=max(st) if st else None,
        ))
    baseline = results[spec.modes[0]]
    for r in rows:
        ok = baseline.success and results[r["mode"]].success
        r["baseline_sum_t"] = baseline.sum_t if baseline.success else None
        r["improvement"] = compute_improvement(baseline.sum_t, r["sum_t"]) if ok else None
    return rows


def run_experiment(spec: ExperimentSpec, n_jobs: int = 1) -> ExperimentResult:
    jobs = [(cell, rep) for cell in spec.cells() for rep in range(spec.repetitions)]
    if n_jobs == 1:
        chunks = [run_cell(spec, c, r) for c, r in jobs]
    else:
        from joblib import Parallel, delayed

        chunks = Parallel(n_jobs=n_jobs)(delayed(run_cell)(spec, c, r) for c, r in jobs)
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["map"], r["agents"], r["delay"], r["fraction"], r["rep"], spec.modes.index(r["mode"])))
    result = ExperimentResult(rows, summarize([r for r in rows if r["mode"] != spec.modes[0]]))
    if spec.output_dir:
        out = Path(spec.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "episodes.csv").write_text(result.csv_text())
        (out / "timing.csv").write_text(rows_to_csv(rows, TIMING_FIELDS))
        (out / "summary.json").write_text(json.dumps(result.summary, indent=1, default=str))
    return result


def read_rows(path) -> list:
    """Re-ingest an episodes CSV with numeric columns parsed back."""
    rows = []
    with open(path) as fh:
        for r in csv.DictReader(fh):
            for k in ("sum_t", "baseline_sum_t", "improvement", "solve_p50", "solve_p95", "solve_max", "delay", "fraction"):
                if k in r:
                    r[k] = float(r[k]) if r[k] not in ("", None) else None
            for k in ("agents", "rep", "seed", "plan_time_steps", "n_groups", "solves", "switches", "solve_nodes"):
                r[k] = int(r[k]) if r.get(k) not in ("", None) else None
            rows.append(r)
    return rows


def bootstrap_diff_confidence(a, b, n_boot=10_000, seed=0) -> float:
    """Fraction of bootstrap resamples in which mean(a) > mean(b)."""
    rng = np.random.default_rng(seed)
    a, b = np.asarray(a, float), np.asarray(b, float)
    ia = rng.integers(0, len(a), size=(n_boot, len(a)))
    ib = rng.integers(0, len(b), size=(n_boot, len(b)))
    return float(np.mean(a[ia].mean(axis=1) > b[ib].mean(axis=1)))
