"""Delay models applied to the simulated fleet.

Two variants are supported:

* ``stall``: every ``period`` seconds a fresh random subset of
  ``ceil(fraction * N)`` AGVs is stopped for the whole interval.
* ``velocity``: every movement segment is executed at a normalized velocity
  drawn from a Gaussian mixture (truncated below at ``min_velocity``).

``none`` disables delays altogether.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Approximation of the bimodal normalized-velocity histogram: most segments run
# close to nominal speed, a minority crawls at roughly 30 %.
DEFAULT_COMPONENTS = ((0.85, 1.0, 0.05), (0.15, 0.3, 0.05))


@dataclass(frozen=True)
class DelayModel:
    kind: str = "none"  # none | stall | velocity
    period: float = 10.0
    fraction: float = 0.2
    components: tuple = DEFAULT_COMPONENTS  # (weight, mean, std) triples
    min_velocity: float = 0.05

    def __post_init__(self):
        if self.kind not in ("none", "stall", "velocity"):
            raise ValueError(f"unknown delay model kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must be in [0, 1], got {self.fraction}")
        if self.kind == "stall" and self.period <= 0:
            raise ValueError("stall period must be positive")
        comps = tuple(tuple(float(x) for x in c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if self.kind == "velocity":
            weights = [c[0] for c in comps]
            if any(w < 0 for w in weights) or not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
                raise ValueError("mixture weights must be nonnegative and sum to 1")
            if any(c[1] <= 0 for c in comps) or self.min_velocity <= 0:
                raise ValueError("mixture velocities must be positive")

    def to_dict(self) -> dict:
        if self.kind == "none":
            return {"kind": "none"}
        if self.kind == "stall":
            return {"kind": "stall", "period": self.period, "fraction": self.fraction}
        return {
            "kind": "velocity",
            "components": [list(c) for c in self.components],
            "min_velocity": self.min_velocity,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "DelayModel":
        if not d:
            return cls()
        d = dict(d)
        if "components" in d:
            d["components"] = tuple(tuple(c) for c in d["components"])
        return cls(**d)


@dataclass
class DelaySampler:
    """Stateful draw source for one episode.

    Stall subsets are drawn interval by interval in time order and velocity
    factors are pre-drawn in a caller-supplied key order, so the realized delays
    depend only on the seed and never on what the controller does.
    """

    model: DelayModel
    n_agents: int
    seed: int
    _rng: np.random.Generator = field(init=False, repr=False)
    _stalled: list = field(init=False, default_factory=list)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def stalled(self, agent_idx: int, t: float) -> bool:
        if self.model.kind != "stall" or self.model.fraction == 0.0:
            return False
        interval = int(math.floor(t / self.model.period + 1e-9))
        while len(self._stalled) <= interval:
            k = math.ceil(self.model.fraction * self.n_agents - 1e-9)
            chosen = self._rng.choice(self.n_agents, size=k, replace=False)
            self._stalled.append(frozenset(int(c) for c in chosen))
        return agent_idx in self._stalled[interval]

    def velocity_factors(self, keys) -> dict:
        """One normalized velocity per key; 1.0 everywhere unless kind == velocity."""
        keys = list(keys)
        if self.model.kind != "velocity":
            return {k: 1.0 for k in keys}
        comps = self.model.components
        weights = np.array([c[0] for c in comps])
        out = {}
        for k in keys:
            c = comps[int(self._rng.choice(len(comps), p=weights))]
            out[k] = max(self.model.min_velocity, float(self._rng.normal(c[1], c[2])))
        return out
