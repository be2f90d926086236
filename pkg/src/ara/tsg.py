"""Screening domain: resource teams on rows, passenger categories on columns.

Each category is a (risk level, flight) pair that must be fully screened,
each resource caps the total usage by the teams containing it, and the
adversary's risk level picks which categories it can attack.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ara.core import AdversaryType, AraGame, AssignmentConstraint, GameError, Target, coverage
from ara.sampling import EqualityFixFailed, Pe0Form


@dataclass(frozen=True)
class ResourceSpec:
    id: str
    capacity: int

    def __post_init__(self):
        if self.capacity < 0 or int(self.capacity) != self.capacity:
            raise GameError(f"resource {self.id!r} capacity must be a nonnegative integer")


@dataclass(frozen=True)
class TeamSpec:
    id: str
    members: tuple[str, ...]  # multiset: repeats consume capacity repeatedly
    effectiveness: float

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(self.members)))
        if not self.members:
            raise GameError(f"team {self.id!r} has no member resources")
        if not 0.0 <= self.effectiveness < 1.0:
            raise GameError(f"team {self.id!r} effectiveness {self.effectiveness} outside [0, 1)")


@dataclass(frozen=True)
class CategorySpec:
    id: str
    risk: str
    flight: str
    passengers: int
    u_def: float
    u_undef: float

    def __post_init__(self):
        if self.passengers < 1:
            raise GameError(f"category {self.id!r} has {self.passengers} passengers")
        if self.u_def < self.u_undef:
            raise GameError(f"category {self.id!r} prefers being undefended")


@dataclass(frozen=True)
class RiskLevel:
    id: str
    probability: float


@dataclass(frozen=True)
class TsgInstance:
    resources: tuple[ResourceSpec, ...]
    teams: tuple[TeamSpec, ...]
    categories: tuple[CategorySpec, ...]
    risk_levels: tuple[RiskLevel, ...]

    def __post_init__(self):
        for name in ("resources", "teams", "categories", "risk_levels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for group in (self.resources, self.teams, self.categories, self.risk_levels):
            ids = [g.id for g in group]
            if len(set(ids)) != len(ids):
                raise GameError("duplicate ids in instance")
        rids = {r.id for r in self.resources}
        for t in self.teams:
            unknown = set(t.members) - rids
            if unknown:
                raise GameError(f"team {t.id!r} uses unknown resource {sorted(unknown)[0]!r}")
        risk_ids = {r.id for r in self.risk_levels}
        for c in self.categories:
            if c.risk not in risk_ids:
                raise GameError(f"category {c.id!r} has unknown risk level {c.risk!r}")
        total_p = sum(r.probability for r in self.risk_levels)
        if abs(total_p - 1.0) > 1e-9:
            raise GameError(f"risk probabilities sum to {total_p}")
        # necessary feasibility condition: each screened passenger draws on
        # at least one unit of some resource capacity
        total_n = sum(c.passengers for c in self.categories)
        total_cap = sum(r.capacity for r in self.resources)
        if total_n > total_cap:
            raise GameError(f"{total_n} passengers exceed the total capacity {total_cap}")


def encode_tsg(inst: TsgInstance) -> AraGame:
    """Rows are teams, columns categories.  Every column must sum to its
    passenger count, every resource caps the weighted usage of the teams
    containing it (multiset members count once per occurrence), and each
    category is a target with weights effectiveness/passengers whose risk
    level names the adversary type."""
    k, n = len(inst.teams), len(inst.categories)
    usage = [Counter(t.members) for t in inst.teams]
    constraints = []
    for r in inst.resources:
        cells = frozenset((i, j) for i, t in enumerate(inst.teams) if usage[i][r.id]
                          for j in range(n))
        if not cells:
            continue
        coeffs = {(i, j): usage[i][r.id] for (i, j) in cells if usage[i][r.id] > 1}
        constraints.append(AssignmentConstraint(cells, 0, r.capacity,
                                                label=f"capacity {r.id}",
                                                coeffs=coeffs or None))
    targets = []
    for j, c in enumerate(inst.categories):
        cells = frozenset((i, j) for i in range(k))
        constraints.append(AssignmentConstraint(cells, c.passengers, c.passengers,
                                                label=f"category {c.id}"))
        weights = {(i, j): inst.teams[i].effectiveness / c.passengers for i in range(k)}
        targets.append(Target(c.id, cells, weights, c.u_def, c.u_undef))
    types = []
    for r in inst.risk_levels:
        mine = frozenset(c.id for c in inst.categories if c.risk == r.id)
        types.append(AdversaryType(r.id, r.probability, mine))
    return AraGame(k, n, tuple(constraints), tuple(targets), tuple(types))


class TsgFixer:
    """Capacity repair lowers allocation one unit at a time, most violated
    resource first and highest-passenger category within it; equality repair
    refills short categories fewest-passengers-first using the feasible team
    whose member resources have the least remaining slack."""

    def __init__(self, inst: TsgInstance):
        self.inst = inst
        self.usage = [Counter(t.members) for t in inst.teams]
        self._ctx = None

    def _context(self, pe0: Pe0Form):
        """Per-capacity index arrays, with cells pre-sorted in the repair
        order (descending passengers, then category id, then team id)."""
        if self._ctx is None or self._ctx[0] is not pe0:
            cats = self.inst.categories
            caps = []
            for con in pe0.inequalities:
                cells = sorted(con.cells, key=lambda c: (-cats[c[1]].passengers,
                                                         cats[c[1]].id,
                                                         self.inst.teams[c[0]].id))
                rows = np.fromiter((c[0] for c in cells), dtype=np.int64, count=len(cells))
                cols = np.fromiter((c[1] for c in cells), dtype=np.int64, count=len(cells))
                coeffs = np.fromiter((con.coeff(c) for c in cells), dtype=np.int64,
                                     count=len(cells))
                caps.append((con.name(), rows, cols, coeffs, con.upper))
            cap_index = {name: idx for idx, (name, *_rest) in enumerate(caps)}
            member_caps = []
            for i in range(len(self.inst.teams)):
                member_caps.append([(cap_index[f"capacity {r}"], mult)
                                    for r, mult in sorted(self.usage[i].items())
                                    if f"capacity {r}" in cap_index])
            self._ctx = (pe0, caps, member_caps)
        return self._ctx[1], self._ctx[2]

    def fix_inequalities(self, x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator) -> np.ndarray:
        caps, _ = self._context(pe0)
        x = x.copy()
        used = [int((x[rows, cols] * coeffs).sum()) for _, rows, cols, coeffs, _u in caps]
        while True:
            worst, excess = -1, 0
            for idx, (_name, _r, _c, _w, upper) in enumerate(caps):
                over = used[idx] - upper
                if over > excess:
                    worst, excess = idx, over
            if worst < 0:
                return x
            name, rows, cols, coeffs, upper = caps[worst]
            hit = int(np.nonzero(x[rows, cols] > 0)[0][0])
            cell = (rows[hit], cols[hit])
            x[cell] -= 1
            # the decremented team may draw on several resources
            for idx, (_name, r2, c2, w2, _u) in enumerate(caps):
                match = (r2 == cell[0]) & (c2 == cell[1])
                if match.any():
                    used[idx] -= int(w2[match][0])

    def fix_equalities(self, x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator) -> np.ndarray:
        caps, member_caps = self._context(pe0)
        x = x.copy()
        slack = [upper - int((x[rows, cols] * coeffs).sum())
                 for _n, rows, cols, coeffs, upper in caps]

        order = sorted(range(len(self.inst.categories)),
                       key=lambda j: (self.inst.categories[j].passengers,
                                      self.inst.categories[j].id))
        for j in order:
            need = self.inst.categories[j].passengers - int(x[:, j].sum())
            while need > 0:
                best_team, best_bottleneck = -1, None
                for i, members in enumerate(member_caps):
                    if all(slack[idx] >= mult for idx, mult in members):
                        bottleneck = min(slack[idx] for idx, _ in members)
                        if best_bottleneck is None or bottleneck < best_bottleneck:
                            best_team, best_bottleneck = i, bottleneck
                if best_team < 0:
                    raise EqualityFixFailed(f"category {self.inst.categories[j].id} is short "
                                            f"{need} with no team slack left")
                x[best_team, j] += 1
                for idx, mult in member_caps[best_team]:
                    slack[idx] -= mult
                need -= 1
        return x


def tsg_fix_inequalities(x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator,
                         inst: TsgInstance) -> np.ndarray:
    return TsgFixer(inst).fix_inequalities(x, pe0, rng)


def tsg_fix_equalities(x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator,
                       inst: TsgInstance) -> np.ndarray:
    return TsgFixer(inst).fix_equalities(x, pe0, rng)


@dataclass(frozen=True)
class DetectionRatio:
    per_category: dict[str, float]
    min_ratio: float


def tsg_detection_ratio(x_before, x_after, game: AraGame) -> DetectionRatio:
    """Per-category ratio of detection probability after an alteration to
    before it; categories with no prior coverage count as unchanged.  The
    minimum certifies the constant in the per-run approximation bound."""
    ratios = {}
    for t in game.targets:
        before = coverage(game, x_before, t.id)
        after = coverage(game, x_after, t.id)
        ratios[t.id] = 1.0 if before < 1e-12 else after / before
    return DetectionRatio(ratios, min(ratios.values()) if ratios else 1.0)
