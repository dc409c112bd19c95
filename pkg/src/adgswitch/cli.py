"""Command line entry point: plan, compile, run, experiment, verify."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .delays import DelayModel
from .harness import ExperimentSpec, TEMPLATES, generate_map, run_experiment, sample_planned_scenario
from .mapf import load_plan, plan_with_restarts, save_plan, validate_plan
from .roadmap import ScenarioError, load_scenario, save_scenario
from .sadg import compile_sadg, sadg_to_dot
from .seadg import compile_seadg, to_dot
from .simulator import run_episode

log = logging.getLogger("adgswitch")


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x)


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _delay_model(args):
    if args.delay_kind == "stall":
        return DelayModel("stall", period=args.delay, fraction=args.fraction)
    if args.delay_kind == "velocity":
        return DelayModel("velocity")
    return DelayModel()


def _scenario_and_plan(args):
    if args.scenario:
        sc = load_scenario(args.scenario)
        if getattr(args, "plan", None):
            return sc, load_plan(args.plan, sc)
        return sc, plan_with_restarts(sc, seed=sc.seed)
    rm = generate_map(args.map, args.dims)
    return sample_planned_scenario(rm, args.agents, args.seed, _delay_model(args),
                                   horizon=args.horizon, control_period=args.period)


def cmd_plan(args):
    sc, plan = _scenario_and_plan(args)
    rep = validate_plan(plan, sc)
    if not rep.ok:
        log.error("generated plan is invalid: %s", rep.kinds())
        return 1
    out = _out(args)
    save_scenario(sc, out / "scenario.json")
    save_plan(plan, out / "plan.json")
    print(f"plan: {len(plan.paths)} agents, makespan {plan.makespan()} -> {out}")
    return 0


def cmd_compile(args):
    sc, plan = _scenario_and_plan(args)
    g = compile_seadg(plan, sc.roadmap)
    s = compile_sadg(plan, sc.roadmap)
    out = _out(args)
    (out / "seadg.dot").write_text(to_dot(g))
    (out / "sadg.dot").write_text(sadg_to_dot(s))
    print(f"compiled: {len(g)} vertices, {len(g.inter_edges())} inter edges, "
          f"{len(s.pairs)} switchable pairs in {s.m_total} groups -> {out}")
    return 0


def cmd_run(args):
    sc, plan = _scenario_and_plan(args)
    res = run_episode(sc, plan, args.mode, seed=args.seed, horizon=args.horizon, period=args.period)
    out = _out(args)
    (out / "result.json").write_text(json.dumps(res.to_dict(), indent=1))
    (out / "events.jsonl").write_text(res.events_jsonl())
    print(f"{res.mode}: success={res.success} reason={res.reason} sum_t={res.sum_t:.3f} "
          f"solves={len(res.solves)}")
    return 0 if res.success else 2


def cmd_experiment(args):
    spec = ExperimentSpec(
        maps=tuple(args.maps.split(",")), dims=args.dims, fleet_sizes=_ints(args.agents_grid),
        delay_kind=args.delay_kind, delays=_floats(args.delays), fractions=_floats(args.fractions),
        modes=tuple(args.modes.split(",")), repetitions=args.reps, seed_base=args.seed,
        horizon=args.horizon, period=args.period, output_dir=args.out,
    )
    res = run_experiment(spec, n_jobs=args.jobs)
    for row in res.summary:
        print(f"{row['map']} n={row['agents']} delay={row['delay']:g} frac={row['fraction']:g} "
              f"{row['mode']}: improvement {row['improvement_mean']:.2f}% "
              f"(sd {row['improvement_std']:.2f}, {row['paired']}/{row['episodes']} paired, "
              f"{row['failures']} failed)")
    return 0


def cmd_verify(args):
    from .milp import build_milp, solve_milp
    from .verify import cross_check, random_instance

    bad = 0
    for k in range(args.instances):
        inst = random_instance(args.seed + k)
        a, b = cross_check(inst)
        m, _ = solve_milp(build_milp(inst.sadg, inst.durations, inst.b_current, inst.now, inst.status))
        ok = a.cost == b.cost and tuple(a.b_star) == tuple(b.b_star) and abs(m - a.cost) <= 1e-6 * max(1.0, a.cost)
        bad += not ok
        if not ok or args.verbose:
            print(f"instance {args.seed + k}: bnb {a.cost:.6f} oracle {b.cost:.6f} milp {m:.6f} "
                  f"free {len(a.free_groups)} {'ok' if ok else 'MISMATCH'}")
    print(f"verify: {args.instances - bad}/{args.instances} instances agree")
    return 1 if bad else 0


def build_parser():
    p = argparse.ArgumentParser(prog="adgswitch", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(q, plan=True):
        q.add_argument("--scenario", help="scenario JSON; otherwise one is sampled")
        if plan:
            q.add_argument("--plan", help="plan JSON matching --scenario")
        q.add_argument("--map", default="warehouse", choices=TEMPLATES)
        q.add_argument("--dims", type=int, default=9)
        q.add_argument("--agents", type=int, default=10)
        q.add_argument("--delay-kind", default="stall", choices=("none", "stall", "velocity"))
        q.add_argument("--delay", type=float, default=10.0, help="stall period (s)")
        q.add_argument("--fraction", type=float, default=0.2)
        q.add_argument("--horizon", type=float, default=5.0)
        q.add_argument("--period", type=float, default=2.0)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out", default="out")

    q = sub.add_parser("plan", help="scenario -> plan file")
    common(q, plan=False)
    q.set_defaults(func=cmd_plan)
    q = sub.add_parser("compile", help="plan -> DOT exports")
    common(q)
    q.set_defaults(func=cmd_compile)
    q = sub.add_parser("run", help="simulate one episode")
    common(q)
    q.add_argument("--mode", default="rhc", choices=("adg", "shc", "rhc"))
    q.set_defaults(func=cmd_run)

    q = sub.add_parser("experiment", help="paired experiment grid")
    q.add_argument("--maps", default="warehouse")
    q.add_argument("--dims", type=int, default=9)
    q.add_argument("--agents-grid", "--fleet", dest="agents_grid", default="10")
    q.add_argument("--delay-kind", default="stall", choices=("none", "stall", "velocity"))
    q.add_argument("--delays", default="10")
    q.add_argument("--fractions", default="0.2")
    q.add_argument("--modes", default="adg,rhc", help="first mode is the baseline")
    q.add_argument("--mode", dest="modes", type=lambda m: f"adg,{m}", help="shorthand for --modes adg,MODE")
    q.add_argument("--reps", type=int, default=5)
    q.add_argument("--horizon", type=float, default=5.0)
    q.add_argument("--period", type=float, default=2.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--out", default="out")
    q.set_defaults(func=cmd_experiment)

    q = sub.add_parser("verify", help="branch-and-bound vs exhaustive vs big-M cross-check")
    q.add_argument("--instances", type=int, default=50)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
