"""Literal big-M mixed-integer program for one solve instance.

Used to cross-check the branch-and-bound reduction and to dump instances as
CPLEX-LP text. Free groups get one binary each; a pair's forward row is
relaxed by ``b*M`` and its reverse row by ``(1-b)*M``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .optimizer import EPS, frozen_groups
from .sadg import as_vector
from .seadg import Status

BIG_M = 1e6


@dataclass
class MilpInstance:
    names: list
    c: np.ndarray
    rows: list  # (coeffs dict var->coef, lower bound, label)
    lower: np.ndarray
    integer: np.ndarray
    free: tuple

    @property
    def n(self):
        return len(self.names)


def build_milp(s, d, b_current, now=0.0, status=None, subset=None, eps=EPS, big_m=BIG_M) -> MilpInstance:
    status = s.skeleton.status if status is None else status
    b_current = as_vector(s, b_current)
    scope = None if subset is None else subset.vertices
    refs = [r for r in s.skeleton.refs() if status[r] != Status.COMPLETED and (scope is None or r in scope)]
    inside = set(refs)
    groups = range(s.m_total) if subset is None else sorted(subset.groups)
    frozen = frozen_groups(s, b_current, status, groups)
    free = tuple(g for g in groups if g not in frozen)

    names, col = [], {}
    for r in refs:
        for kind in ("ts", "tg"):
            col[(kind, r)] = len(names)
            names.append(f"{kind}_{r[0]}_{r[1]}")
    for g in free:
        col[("b", g)] = len(names)
        names.append(f"b_{g}")
    rows = []

    def prec(u, v, label, relax=None):
        # t_s(v) - t_g(u) >= eps, optionally relaxed by a binary
        coeffs = {col[("ts", v)]: 1.0, col[("tg", u)]: -1.0}
        lb = eps
        if relax == "b":
            coeffs[col[("b", g_cur)]] = big_m
        elif relax == "1-b":
            coeffs[col[("b", g_cur)]] = -big_m
            lb = eps - big_m
        rows.append((coeffs, lb, label))

    for r in refs:
        dt = d.delta(r, status[r])
        rows.append(({col[("tg", r)]: 1.0, col[("ts", r)]: -1.0}, dt + eps, f"dur_{r}"))
        rows.append(({col[("ts", r)]: 1.0}, now, f"now_{r}"))
    free_set = set(free)
    fixed = list(s.skeleton.edges)
    for g in range(s.m_total):
        if g not in free_set:
            fixed.extend(s.group_edges(g, b_current[g]))
    g_cur = None
    for u, v in fixed:
        if u in inside and v in inside:
            prec(u, v, f"fix_{u}_{v}")
    for g_cur in free:
        for e in s.group_edges(g_cur, 0):
            if e[0] in inside and e[1] in inside:
                prec(e[0], e[1], f"fwd_{g_cur}", "b")
        for e in s.group_edges(g_cur, 1):
            if e[0] in inside and e[1] in inside:
                prec(e[0], e[1], f"rev_{g_cur}", "1-b")

    c = np.zeros(len(names))
    last = {}
    for r in refs:
        last[r[0]] = r
    for r in last.values():
        c[col[("tg", r)]] = 1.0
    integer = np.zeros(len(names))
    for g in free:
        integer[col[("b", g)]] = 1
    lower = np.full(len(names), -np.inf)
    return MilpInstance(names, c, rows, lower, integer, free)


def solve_milp(inst: MilpInstance, fixed_b: dict | None = None, polish=True):
    """Optimal objective and binary values, or (None, None) when infeasible.

    With M = 1e6 the solver's integrality tolerance lets a "binary" of
    0.99999996 leak a few hundredths of a second through a big-M row, so the
    rounded binaries are fixed and the continuous part re-solved.
    """
    n = inst.n
    if n == 0:
        return 0.0, {}
    A = np.zeros((len(inst.rows), n))
    lb = np.zeros(len(inst.rows))
    for k, (coeffs, low, _) in enumerate(inst.rows):
        for j, a in coeffs.items():
            A[k, j] = a
        lb[k] = low
    lo = inst.lower.copy()
    hi = np.full(n, np.inf)
    for j in np.flatnonzero(inst.integer):
        lo[j], hi[j] = 0.0, 1.0
    if fixed_b:
        for g, val in fixed_b.items():
            j = inst.names.index(f"b_{g}")
            lo[j] = hi[j] = float(val)
    cons = [LinearConstraint(A, lb, np.full(len(lb), np.inf))] if len(lb) else []
    res = milp(inst.c, constraints=cons, integrality=inst.integer, bounds=Bounds(lo, hi),
               options={"mip_rel_gap": 0.0})
    if res.status != 0:
        return None, None
    b = {g: int(round(res.x[inst.names.index(f"b_{g}")])) for g in inst.free}
    if polish and fixed_b is None and b:
        return solve_milp(inst, b, polish=False)
    return float(res.fun), b


def write_lp(inst: MilpInstance, path) -> None:
    """CPLEX-LP text: objective, constraint rows with big-M terms, bounds, binaries."""
    def term(coef, name):
        sign = "-" if coef < 0 else "+"
        return f"{sign} {abs(coef):.12g} {name}"

    lines = ["\\ switch selection instance", "Minimize", " obj: " + " ".join(
        term(cv, inst.names[j]) for j, cv in enumerate(inst.c) if cv)]
    lines.append("Subject To")
    for k, (coeffs, low, label) in enumerate(inst.rows):
        body = " ".join(term(a, inst.names[j]) for j, a in sorted(coeffs.items()))
        lines.append(f" c{k}: {body} >= {low:.12g}")
    lines.append("Bounds")
    for j, name in enumerate(inst.names):
        if not inst.integer[j]:
            lines.append(f" {name} free")
    lines.append("Binaries")
    lines.extend(f" {inst.names[j]}" for j in np.flatnonzero(inst.integer))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
