"""Seeded random instance generators for benchmark sweeps.

Both families fix the defended payoff at -1 and draw the undefended payoff
uniformly from the integers -10..-2.  Screening capacities are sized from
a uniform nominal allocation with twenty percent headroom so instances are
feasible with high probability; passenger counts shrink as the risk level
rises.  Identical configurations produce byte-identical instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ara.core import GameError
from ara.fams import FamsInstance, FlightSpec, Schedule
from ara.tsg import CategorySpec, ResourceSpec, RiskLevel, TeamSpec, TsgInstance


@dataclass(frozen=True)
class GenConfig:
    seed: int
    family: str  # "fams" | "tsg"
    flights: int = 10
    # fams sizing
    schedules: int = 10
    targets_per_schedule: int = 2
    resources: int = 3
    # tsg sizing
    risk_levels: int = 2
    resource_types: int = 3
    team_types: int = 3

    def __post_init__(self):
        if self.family not in ("fams", "tsg"):
            raise GameError(f"unknown family {self.family!r}")
        sizes = (self.flights, self.schedules, self.targets_per_schedule, self.resources,
                 self.risk_levels, self.resource_types, self.team_types)
        if any(s < 1 for s in sizes):
            raise GameError("all size parameters must be at least 1")


def gen_fams(cfg: GenConfig) -> FamsInstance:
    if cfg.family != "fams":
        raise GameError(f"config family is {cfg.family!r}, not fams")
    if cfg.targets_per_schedule > cfg.flights:
        raise GameError(f"schedules of {cfg.targets_per_schedule} flights need at least "
                        f"that many flights, got {cfg.flights}")
    rng = np.random.default_rng(cfg.seed)
    flights = tuple(FlightSpec(f"f{i}", -1.0, -float(rng.integers(2, 11)))
                    for i in range(cfg.flights))
    ids = [f.id for f in flights]
    schedules = []
    for j in range(cfg.schedules):
        picked = rng.choice(cfg.flights, size=cfg.targets_per_schedule, replace=False)
        schedules.append(Schedule(f"s{j}", frozenset(ids[p] for p in picked)))
    return FamsInstance(cfg.resources, tuple(schedules), flights)


def gen_tsg(cfg: GenConfig) -> TsgInstance:
    if cfg.family != "tsg":
        raise GameError(f"config family is {cfg.family!r}, not tsg")
    rng = np.random.default_rng(cfg.seed)
    resource_ids = [f"r{i}" for i in range(cfg.resource_types)]

    probs = rng.random(cfg.risk_levels)
    probs /= probs.sum()
    risks = tuple(RiskLevel(f"risk{i}", float(p)) for i, p in enumerate(probs))

    teams = []
    for i in range(cfg.team_types):
        size = int(rng.integers(1, cfg.resource_types + 1))
        members = tuple(resource_ids[m] for m in sorted(rng.choice(cfg.resource_types,
                                                                   size=size, replace=False)))
        teams.append(TeamSpec(f"t{i}", members, float(rng.uniform(0.1, 0.95))))

    # risk index 0 is the highest risk: those categories get fewer passengers
    categories = []
    for ri in range(cfg.risk_levels):
        hi = 5 + int(45 * (ri + 1) / cfg.risk_levels)
        for fi in range(cfg.flights):
            n = int(rng.integers(5, hi + 1))
            categories.append(CategorySpec(f"c_{ri}_{fi}", f"risk{ri}", f"f{fi}", n,
                                           -1.0, -float(rng.integers(2, 11))))

    total_n = sum(c.passengers for c in categories)
    k = len(teams)
    resources = []
    for rid in resource_ids:
        draw = sum(sum(1 for m in t.members if m == rid) for t in teams)
        nominal = draw * total_n / k
        resources.append(ResourceSpec(rid, max(1, int(np.ceil(1.2 * nominal)))))
    return TsgInstance(tuple(resources), tuple(teams), tuple(categories), risks)
