"""Abstract allocation-game model: types, constraint checks, utilities.

A game allocates k assets (rows) to n objects (columns).  Assignment
constraints bound integer cell-set sums, targets are weighted cell sets
with defended/undefended payoffs, and adversary types partition targets.
All types are immutable after construction and the operations are pure
functions, so concurrent use needs no locking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ara import lp as lpmod

CellIndex = tuple[int, int]

MARGINAL_TOL = 1e-7
DEFAULT_MAX_TARGETS_FACTOR = 64


class GameError(Exception):
    """Invalid game data or an operation on an unknown target."""


@dataclass(frozen=True)
class AssignmentConstraint:
    """Integer interval bound on a weighted cell-set sum.

    ``coeffs`` holds per-cell positive integer usage multiplicities; cells
    absent from it count once.  The constraint is an equality iff
    lower == upper.
    """

    cells: frozenset[CellIndex]
    lower: int
    upper: int
    label: str = ""
    coeffs: dict[CellIndex, int] | None = None

    def __post_init__(self):
        if not self.cells:
            raise GameError(f"constraint {self.label!r} has no cells")
        if not (0 <= self.lower <= self.upper):
            raise GameError(f"constraint {self.label!r} has bad bounds [{self.lower}, {self.upper}]")
        if int(self.lower) != self.lower or int(self.upper) != self.upper:
            raise GameError(f"constraint {self.label!r} bounds must be integers")
        if self.coeffs:
            if not set(self.coeffs) <= self.cells:
                raise GameError(f"constraint {self.label!r} has coefficients outside its cells")
            if any(int(c) != c or c < 1 for c in self.coeffs.values()):
                raise GameError(f"constraint {self.label!r} coefficients must be positive integers")

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper

    def sorted_cells(self) -> list[CellIndex]:
        return sorted(self.cells)

    def coeff(self, cell: CellIndex) -> int:
        return self.coeffs.get(cell, 1) if self.coeffs else 1

    def value(self, matrix: np.ndarray) -> float:
        return float(sum(self.coeff(c) * matrix[c] for c in self.cells))

    def name(self) -> str:
        return self.label or f"constraint over {len(self.cells)} cells"


@dataclass(frozen=True)
class Target:
    id: str
    cells: frozenset[CellIndex]
    weights: dict[CellIndex, float]
    payoff_defended: float
    payoff_undefended: float

    def __post_init__(self):
        if not set(self.weights) <= self.cells:
            raise GameError(f"target {self.id!r} has weights outside its cells")
        if any(w < 0 for w in self.weights.values()):
            raise GameError(f"target {self.id!r} has negative weights")
        if self.payoff_defended < self.payoff_undefended:
            raise GameError(f"target {self.id!r} prefers being undefended")


@dataclass(frozen=True)
class AdversaryType:
    id: str
    probability: float
    targets: frozenset[str]

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise GameError(f"adversary type {self.id!r} has probability {self.probability}")


@dataclass(frozen=True)
class AraGame:
    """k x n allocation game.  Games without explicit adversary types get a
    single type attacking every target with probability one."""

    k: int
    n: int
    constraints: tuple[AssignmentConstraint, ...]
    targets: tuple[Target, ...]
    adversary_types: tuple[AdversaryType, ...] = ()
    max_targets_factor: int = DEFAULT_MAX_TARGETS_FACTOR
    validate_weights: bool = True

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.k < 1 or self.n < 1:
            raise GameError("matrix dimensions must be positive")
        if len(self.targets) > self.k * self.n * self.max_targets_factor:
            raise GameError(f"{len(self.targets)} targets exceeds the "
                            f"{self.k * self.n * self.max_targets_factor} cap")
        for con in self.constraints:
            self._check_cells(con.cells, f"constraint {con.name()}")
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise GameError("duplicate target ids")
        for t in self.targets:
            self._check_cells(t.cells, f"target {t.id!r}")
        if not self.adversary_types:
            object.__setattr__(self, "adversary_types",
                               (AdversaryType("default", 1.0, frozenset(ids)),))
        else:
            object.__setattr__(self, "adversary_types", tuple(self.adversary_types))
        total_p = sum(a.probability for a in self.adversary_types)
        if abs(total_p - 1.0) > 1e-9:
            raise GameError(f"adversary type probabilities sum to {total_p}")
        seen: set[str] = set()
        for a in self.adversary_types:
            if a.targets & seen:
                raise GameError("adversary types share targets")
            seen |= a.targets
        if seen != set(ids):
            raise GameError("every target must belong to exactly one adversary type")
        if self.validate_weights:
            for t in self.targets:
                _check_weight_bound(self, t)

    def _check_cells(self, cells, what: str) -> None:
        for (i, j) in cells:
            if not (0 <= i < self.k and 0 <= j < self.n):
                raise GameError(f"{what} references cell ({i}, {j}) outside {self.k}x{self.n}")

    def target(self, target_id: str) -> Target:
        for t in self.targets:
            if t.id == target_id:
                return t
        raise GameError(f"unknown target {target_id!r}")


def _check_weight_bound(game: AraGame, t: Target) -> None:
    """Weights must keep the target's weighted mass at or below one over the
    marginal polytope.  A containing constraint with a small enough bound
    certifies this cheaply; otherwise maximize the mass by LP.  The marginal
    polytope contains every mixed strategy, so the check is conservative."""
    if not t.weights:
        return
    wmax = max(t.weights.values())
    for con in game.constraints:
        if t.cells <= con.cells and con.upper * wmax <= 1.0 + 1e-9:
            return
    prog = lpmod.LinearProgram(game.k * game.n)
    for c, w in t.weights.items():
        prog.objective[c[0] * game.n + c[1]] = w
    unconstrained = set(t.weights) - set().union(*(con.cells for con in game.constraints))
    if any(t.weights.get(c, 0) > 0 for c in unconstrained):
        raise GameError(f"target {t.id!r} puts weight on unconstrained cells")
    for con in game.constraints:
        coeffs = {c[0] * game.n + c[1]: float(con.coeff(c)) for c in con.cells}
        if con.is_equality:
            prog.add_row(coeffs, "=", con.lower)
        else:
            prog.add_row(coeffs, "<=", con.upper)
            if con.lower > 0:
                prog.add_row(coeffs, ">=", con.lower)
    sol = lpmod.solve_lp(prog)
    if sol.status == "unbounded" or (sol.status == "optimal" and sol.objective_value > 1.0 + MARGINAL_TOL):
        raise GameError(f"target {t.id!r} weights admit coverage above one")


@dataclass(frozen=True)
class MarginalStrategy:
    """Real-valued allocation; feasibility is relative to a game and checked
    with constraint_violations."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2:
            raise GameError("strategy matrix must be 2-d")
        if np.any(arr < -MARGINAL_TOL):
            raise GameError("marginal strategy has negative cells")
        arr[arr < 0] = 0.0
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class PureStrategy:
    """Integral allocation; validity is checked exactly by is_valid_pure."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values)
        if arr.ndim != 2:
            raise GameError("strategy matrix must be 2-d")
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(arr)
            if np.any(np.abs(arr - rounded) > 0):
                raise GameError("pure strategy has fractional cells")
            arr = rounded.astype(np.int64)
        if np.any(arr < 0):
            raise GameError("pure strategy has negative cells")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class MixedStrategyEstimate:
    samples: tuple[PureStrategy, ...]
    mean: np.ndarray

    def __post_init__(self):
        if not self.samples:
            raise GameError("estimate needs at least one sample")
        mean = np.array(self.mean, dtype=float)
        avg = np.mean([s.values for s in self.samples], axis=0)
        if np.max(np.abs(mean - avg)) > 1e-12:
            raise GameError("mean does not match the sample average")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "samples", tuple(self.samples))

    @classmethod
    def from_samples(cls, samples) -> "MixedStrategyEstimate":
        samples = tuple(samples)
        return cls(samples, np.mean([s.values for s in samples], axis=0))


def _values(x) -> np.ndarray:
    if isinstance(x, (MarginalStrategy, PureStrategy)):
        return x.values
    return np.asarray(x)


def coverage(game: AraGame, x, target_id: str, clamp: bool = False) -> float:
    """Weighted allocation mass on the target's cells; the probability the
    attack is defended.  ``clamp`` trims to [0, 1] for reporting."""
    t = game.target(target_id)
    m = _values(x)
    c = float(sum(w * m[cell] for cell, w in t.weights.items()))
    return min(1.0, max(0.0, c)) if clamp else c


def defender_utility(game: AraGame, x, target_id: str) -> float:
    t = game.target(target_id)
    c = coverage(game, x, target_id)
    return c * t.payoff_defended + (1.0 - c) * t.payoff_undefended


def game_value(game: AraGame, x) -> float:
    """Expected defender utility when each adversary type best-responds.

    Types with zero probability or no targets contribute nothing.
    """
    m = _values(x)
    if m.shape != (game.k, game.n):
        raise GameError(f"strategy shape {m.shape} does not match {(game.k, game.n)}")
    total = 0.0
    for a in game.adversary_types:
        if a.probability == 0.0 or not a.targets:
            continue
        total += a.probability * min(defender_utility(game, m, t) for t in sorted(a.targets))
    return total


@dataclass(frozen=True)
class Violation:
    constraint: str
    achieved: float
    lower: float
    upper: float

    def __str__(self):
        return f"{self.constraint}: sum {self.achieved} outside [{self.lower}, {self.upper}]"


def constraint_violations(game: AraGame, matrix: np.ndarray, tol: float = 0.0) -> list[Violation]:
    out = []
    for con in game.constraints:
        v = con.value(matrix)
        if v < con.lower - tol or v > con.upper + tol:
            out.append(Violation(con.name(), v, con.lower, con.upper))
    return out


def is_valid_pure(game: AraGame, p) -> tuple[bool, list[Violation]]:
    """Exact integrality and constraint check; the violation list names each
    failing constraint with its achieved sum."""
    m = _values(p)
    if m.shape != (game.k, game.n):
        raise GameError(f"strategy shape {m.shape} does not match {(game.k, game.n)}")
    violations = []
    frac = np.abs(m - np.rint(m))
    if np.any(frac > 0):
        bad = np.argwhere(frac > 0)
        violations.append(Violation(f"integrality at cell {tuple(bad[0])}", float(m[tuple(bad[0])]), 0, 0))
        return False, violations
    violations = constraint_violations(game, np.rint(m).astype(np.int64), tol=0.0)
    return not violations, violations


@dataclass(frozen=True)
class ImplementabilityResult:
    bi_hierarchical: bool
    partition: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    odd_cycle: tuple[int, ...] | None = None

    def witness_labels(self, game: AraGame):
        names = [c.name() for c in game.constraints]
        if self.bi_hierarchical:
            return tuple(tuple(names[i] for i in part) for part in self.partition)
        return tuple(names[i] for i in self.odd_cycle)


def _crossing(a: AssignmentConstraint, b: AssignmentConstraint) -> bool:
    return bool(a.cells & b.cells) and not a.cells <= b.cells and not b.cells <= a.cells


def check_implementability(game: AraGame) -> ImplementabilityResult:
    """Decide whether the assignment constraints split into two laminar
    families (all marginals then implementable as mixed strategies).

    Builds the graph whose edges join crossing constraint pairs and tests
    bipartiteness; the two-coloring is the witness, an odd crossing cycle
    the counter-witness.
    """
    cons = game.constraints
    m = len(cons)
    adj: list[list[int]] = [[] for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if _crossing(cons[i], cons[j]):
                adj[i].append(j)
                adj[j].append(i)
    color = [-1] * m
    parent = [-1] * m
    for start in range(m):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            u = queue.pop(0)
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    queue.append(v)
                elif color[v] == color[u]:
                    return ImplementabilityResult(False, odd_cycle=_odd_cycle(u, v, parent))
    part0 = tuple(i for i in range(m) if color[i] == 0)
    part1 = tuple(i for i in range(m) if color[i] == 1)
    return ImplementabilityResult(True, partition=(part0, part1))


def _odd_cycle(u: int, v: int, parent: list[int]) -> tuple[int, ...]:
    path_u, path_v = [u], [v]
    seen = {u: 0}
    x = u
    while parent[x] >= 0:
        x = parent[x]
        seen[x] = len(path_u)
        path_u.append(x)
    x = v
    while x not in seen:
        x = parent[x]
        path_v.append(x)
    cut = seen[x]
    return tuple(path_u[:cut + 1] + path_v[-2::-1])
