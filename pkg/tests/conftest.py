"""Shared toy instances.

``fig1b_fams`` is the two-flight/three-schedule/three-marshal air marshal
toy with overlapping schedules; ``fig1c_tsg`` the two-resource screening
toy whose middle team uses both resources, so both have genuinely crossing
assignment constraints.
"""

import numpy as np
import pytest

from ara.fams import FamsInstance, FlightSpec, Schedule
from ara.tsg import CategorySpec, ResourceSpec, RiskLevel, TeamSpec, TsgInstance


@pytest.fixture
def fig1b_fams() -> FamsInstance:
    return FamsInstance(
        num_marshals=3,
        schedules=(Schedule("s1", frozenset({"f1"})),
                   Schedule("s2", frozenset({"f1", "f2"})),
                   Schedule("s3", frozenset({"f2"}))),
        flights=(FlightSpec("f1", -1.0, -5.0), FlightSpec("f2", -1.0, -9.0)),
    )


@pytest.fixture
def fig1c_tsg() -> TsgInstance:
    return TsgInstance(
        resources=(ResourceSpec("xray", 7), ResourceSpec("md", 15)),
        teams=(TeamSpec("t_x", ("xray",), 0.9),
               TeamSpec("t_xm", ("md", "xray"), 0.8),
               TeamSpec("t_m", ("md",), 0.5)),
        categories=(CategorySpec("c_r1_f1", "r1", "f1", 2, -1.0, -6.0),
                    CategorySpec("c_r2_f1", "r2", "f1", 3, -1.0, -4.0),
                    CategorySpec("c_r2_f2", "r2", "f2", 15, -1.0, -8.0)),
        risk_levels=(RiskLevel("r1", 0.5), RiskLevel("r2", 0.5)),
    )


def random_toy_fams(rng: np.random.Generator) -> FamsInstance:
    """Random air-marshal toy within the corpus caps: at most 6 flights,
    8 schedules, 3 marshals (at least 2 so approximation-ratio checks are
    not degenerate)."""
    n_fl = int(rng.integers(2, 7))
    n_sc = int(rng.integers(2, 9))
    marshals = int(rng.integers(2, 4))
    flights = tuple(FlightSpec(f"f{i}", -1.0, -float(rng.integers(2, 11)))
                    for i in range(n_fl))
    schedules = []
    for j in range(n_sc):
        size = int(rng.integers(1, min(3, n_fl) + 1))
        picked = rng.choice(n_fl, size=size, replace=False)
        schedules.append(Schedule(f"s{j}", frozenset(f"f{p}" for p in picked)))
    return FamsInstance(marshals, tuple(schedules), flights)


def random_toy_tsg(rng: np.random.Generator) -> TsgInstance:
    """Random screening toy within the corpus caps: at most 3 categories and
    3 teams, capacities at most 6."""
    while True:
        n_res = int(rng.integers(1, 3))
        n_teams = int(rng.integers(2, 4))
        n_cats = int(rng.integers(1, 4))
        n_risks = int(rng.integers(1, n_cats + 1))
        teams = []
        for i in range(n_teams):
            size = int(rng.integers(1, n_res + 1))
            members = tuple(f"r{m}" for m in sorted(rng.choice(n_res, size=size, replace=False)))
            teams.append(TeamSpec(f"t{i}", members, float(rng.uniform(0.1, 0.95))))
        probs = rng.random(n_risks)
        probs /= probs.sum()
        risks = tuple(RiskLevel(f"risk{i}", float(p)) for i, p in enumerate(probs))
        categories = []
        for j in range(n_cats):
            ri = j % n_risks
            categories.append(CategorySpec(f"c{j}", f"risk{ri}", f"f{j}",
                                           int(rng.integers(1, 4)), -1.0,
                                           -float(rng.integers(2, 11))))
        total_n = sum(c.passengers for c in categories)
        caps = {}
        ok = True
        for r in range(n_res):
            draw = sum(1 for t in teams for m in t.members if m == f"r{r}")
            cap = int(np.ceil(1.3 * draw * total_n / n_teams)) + 1
            if cap > 6:
                ok = False
                break
            caps[f"r{r}"] = cap
        if not ok:
            continue
        resources = tuple(ResourceSpec(f"r{r}", caps[f"r{r}"]) for r in range(n_res))
        if total_n > sum(c.capacity for c in resources):
            continue
        return TsgInstance(resources, tuple(teams), tuple(categories), risks)
