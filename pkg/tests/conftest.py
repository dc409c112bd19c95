import pytest

from adgswitch.mapf import MapfPlan
from adgswitch.roadmap import Agent, Roadmap, Scenario


def grid(cols, rows, r=0.3):
    verts = [(x + cols * y, float(x), float(y)) for y in range(rows) for x in range(cols)]
    edges = []
    for y in range(rows):
        for x in range(cols):
            if x + 1 < cols:
                edges.append((x + cols * y, x + 1 + cols * y))
            if y + 1 < rows:
                edges.append((x + cols * y, x + cols * (y + 1)))
    return Roadmap(tuple(verts), tuple(edges), r)


def crossing_fixture():
    """Four agents crossing a 5x5 grid; hand-timed so nobody conflicts.

    A runs west->east on row 2, B south->north on column 2 (waits once for A),
    C east->west on row 1 behind B, D north->south on column 1 behind A and
    ahead of C.
    """
    rm = grid(5, 5)
    v = lambda x, y: x + 5 * y  # noqa: E731
    paths = {
        "A": [v(0, 2), v(1, 2), v(2, 2), v(3, 2), v(4, 2)],
        "B": [v(2, 0), v(2, 1), v(2, 1), v(2, 2), v(2, 3), v(2, 4)],
        "C": [v(4, 1), v(3, 1), v(3, 1), v(2, 1), v(1, 1), v(0, 1)],
        "D": [v(1, 4), v(1, 3), v(1, 2), v(1, 1), v(1, 0)],
    }
    plan = MapfPlan.from_vertices(paths)
    agents = tuple(Agent(a, p[0], p[-1]) for a, p in paths.items())
    return Scenario(rm, agents), plan


def junctions(n):
    """``n`` separate plus-shaped junctions, 10 m apart, arms of length 2.

    Junction j has an east-bound agent ``E{j}`` that crosses the centre at
    t=2 and a north-bound agent ``N{j}`` that waits one step and crosses at t=3.
    """
    verts, edges, paths = [], [], {}
    for j in range(n):
        ox = 10.0 * j
        c = f"c{j}"
        verts.append((c, ox, 0.0))
        for d in (-2, -1, 1, 2):
            verts.append((f"h{j}_{d}", ox + d, 0.0))
            verts.append((f"v{j}_{d}", ox, float(d)))
        for axis in ("h", "v"):
            line = [f"{axis}{j}_-2", f"{axis}{j}_-1", c, f"{axis}{j}_1", f"{axis}{j}_2"]
            edges.extend(zip(line, line[1:]))
        paths[f"E{j}"] = [f"h{j}_-2", f"h{j}_-1", c, f"h{j}_1", f"h{j}_2"]
        paths[f"N{j}"] = [f"v{j}_-2", f"v{j}_-1", f"v{j}_-1", c, f"v{j}_1", f"v{j}_2"]
    rm = Roadmap(tuple(verts), tuple(edges), 0.3)
    agents = tuple(Agent(a, p[0], p[-1]) for a, p in paths.items())
    return Scenario(rm, agents), MapfPlan.from_vertices(paths)


def corridor(n, siding=False):
    verts = [(k, float(k), 0.0) for k in range(n)]
    edges = [(k, k + 1) for k in range(n - 1)]
    if siding:
        verts.append(("s", float(n // 2), 1.0))
        edges.append((n // 2, "s"))
    return Roadmap(tuple(verts), tuple(edges), 0.3)


@pytest.fixture
def crossing():
    return crossing_fixture()
