"""Air-marshal domain: schedules on columns, marshals on rows.

Covers the encoding into the abstract game, the schedule-zeroing repair
heuristic, the exact best-response search, and a plain column-generation
solver used as the exact baseline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ara.core import AdversaryType, AraGame, AssignmentConstraint, GameError, PureStrategy, Target
from ara.lp import LinearProgram, solve_lp
from ara.sampling import Pe0Form

DEFAULT_NODE_CAP = 10 ** 7


class DbrNodeCapError(GameError):
    """Best-response search exceeded its node cap; shrink the instance."""


class SolveTimeout(Exception):
    def __init__(self, cutoff_s: float):
        self.cutoff_s = cutoff_s
        super().__init__(f"solve exceeded the {cutoff_s}s cutoff")


@dataclass(frozen=True)
class Schedule:
    id: str
    flights: frozenset[str]

    def __post_init__(self):
        if not self.flights:
            raise GameError(f"schedule {self.id!r} covers no flights")
        object.__setattr__(self, "flights", frozenset(self.flights))


@dataclass(frozen=True)
class FlightSpec:
    id: str
    u_def: float
    u_undef: float

    def __post_init__(self):
        if self.u_def < self.u_undef:
            raise GameError(f"flight {self.id!r} prefers being undefended")


@dataclass(frozen=True)
class FamsInstance:
    num_marshals: int
    schedules: tuple[Schedule, ...]
    flights: tuple[FlightSpec, ...]
    forbidden: frozenset[tuple[int, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "schedules", tuple(self.schedules))
        object.__setattr__(self, "flights", tuple(self.flights))
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        if self.num_marshals < 1:
            raise GameError("need at least one marshal")
        sched_ids = [s.id for s in self.schedules]
        if len(set(sched_ids)) != len(sched_ids):
            raise GameError("duplicate schedule ids")
        flight_ids = {f.id for f in self.flights}
        if len(flight_ids) != len(self.flights):
            raise GameError("duplicate flight ids")
        for s in self.schedules:
            unknown = s.flights - flight_ids
            if unknown:
                raise GameError(f"schedule {s.id!r} references unknown flight {sorted(unknown)[0]!r}")
        for m, sid in self.forbidden:
            if not 0 <= m < self.num_marshals or sid not in sched_ids:
                raise GameError(f"forbidden pair ({m}, {sid!r}) references unknown marshal or schedule")


def encode_fams(inst: FamsInstance) -> AraGame:
    """Rows are marshals, columns schedules.  Each marshal gets a unit row
    budget, forbidden pairs pin cells to zero, and each flight becomes a
    unit-weight target over every cell of every schedule containing it,
    with a matching at-most-one allocation constraint."""
    k, n = inst.num_marshals, len(inst.schedules)
    col = {s.id: j for j, s in enumerate(inst.schedules)}
    constraints = []
    for i in range(k):
        cells = frozenset((i, j) for j in range(n))
        constraints.append(AssignmentConstraint(cells, 0, 1, label=f"marshal {i}"))
    for m, sid in sorted(inst.forbidden):
        constraints.append(AssignmentConstraint(frozenset({(m, col[sid])}), 0, 0,
                                                label=f"forbidden ({m}, {sid})"))
    targets = []
    for f in inst.flights:
        cells = frozenset((i, col[s.id]) for s in inst.schedules if f.id in s.flights
                          for i in range(k))
        if cells:
            constraints.append(AssignmentConstraint(cells, 0, 1, label=f"flight {f.id}"))
        targets.append(Target(f.id, cells, {c: 1.0 for c in cells}, f.u_def, f.u_undef))
    return AraGame(k, n, tuple(constraints), tuple(targets))


class FamsFixer:
    """Repair heuristic: zero out schedules that hit the most violated
    flights without touching any satisfied one; when a violated flight has
    no such schedule, drop one of its allocated schedules uniformly at
    random.  Freed marshals land on the slack column, so equalities are
    restored without ever decreasing a cell."""

    def __init__(self):
        self._ctx = None  # (pe0, incidence, col_flights, flight_cols, ids)

    def _context(self, pe0: Pe0Form):
        if self._ctx is None or self._ctx[0] is not pe0:
            game = pe0.source_game
            n = pe0.source_cols
            ids = [t.id for t in game.targets]
            flight_cols = [sorted({j for _, j in t.cells}) for t in game.targets]
            incidence = np.zeros((len(ids), n))
            col_flights: list[list[int]] = [[] for _ in range(n)]
            for fi, cols in enumerate(flight_cols):
                for j in cols:
                    incidence[fi, j] = 1.0
                    col_flights[j].append(fi)
            self._ctx = (pe0, incidence, col_flights, flight_cols, ids)
        return self._ctx[1:]

    def fix_inequalities(self, x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator) -> np.ndarray:
        incidence, col_flights, flight_cols, ids = self._context(pe0)
        x = x.copy()
        n = pe0.source_cols
        while True:
            col_tot = x[:, :n].sum(axis=0)
            cov = np.rint(incidence @ col_tot).astype(np.int64)
            violated = cov > 1
            if not violated.any():
                return x
            best_col, best_count = -1, 0
            for j in np.nonzero(col_tot > 0)[0]:
                hit = col_flights[j]
                if any(cov[fi] == 1 for fi in hit):
                    continue
                n_violated = sum(1 for fi in hit if cov[fi] > 1)
                if n_violated > best_count:
                    best_col, best_count = int(j), n_violated
            if best_col < 0:
                worst = min(np.nonzero(violated)[0], key=lambda fi: (-cov[fi], ids[fi]))
                options = [j for j in flight_cols[worst] if col_tot[j] > 0]
                best_col = options[rng.integers(len(options))]
            # one marshal comes off the chosen schedule per step; repeated
            # steps re-rank, so repair stops as soon as targets hit coverage 1
            row = int(np.nonzero(x[:, best_col] > 0)[0][0])
            x[row, best_col] -= 1

    def fix_equalities(self, x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator) -> np.ndarray:
        x = x.copy()
        slack = pe0.source_cols
        if x.shape[1] == slack:
            return x
        budgets = np.zeros(x.shape[0], dtype=np.int64)
        for con in pe0.equality_partition:
            budgets[next(iter(con.cells))[0]] = con.lower
        short = budgets - x.sum(axis=1)
        if np.any(short < 0):
            raise GameError("a row exceeds its budget after repair")
        x[:, slack] += short
        return x


def fams_fix_inequalities(x: np.ndarray, pe0: Pe0Form, rng: np.random.Generator) -> np.ndarray:
    return FamsFixer().fix_inequalities(x, pe0, rng)


def fams_dbr(inst: FamsInstance, d: np.ndarray, node_cap: int = DEFAULT_NODE_CAP,
             flight_weights: dict[str, float] | None = None) -> PureStrategy:
    """Exact defender best response: maximize the d-weighted allocation over
    pure strategies by depth-first search over marshal assignments.

    When every marshal has the same weight row and nothing is forbidden the
    problem is a max-weight packing of flight-disjoint schedules, searched
    over schedules directly.  ``flight_weights`` (per-flight masses with
    d[i,j] equal to the sum over the schedule's flights, as in column
    generation) tightens the bound: no packing can beat the uncovered mass.
    """
    k, n = inst.num_marshals, len(inst.schedules)
    d = np.asarray(d, dtype=float)
    if d.shape != (k, n):
        raise GameError(f"weight shape {d.shape} does not match {(k, n)}")
    if np.any(d < 0):
        raise GameError("best-response weights must be nonnegative")
    col = {s.id: j for j, s in enumerate(inst.schedules)}
    sched_flights = [frozenset(s.flights) for s in inst.schedules]
    banned = [set() for _ in range(k)]
    for m, sid in inst.forbidden:
        banned[m].add(col[sid])

    if not inst.forbidden and np.all(d == d[0]):
        return _dbr_disjoint_packing(inst, d, sched_flights, node_cap, flight_weights)

    # marshals with the same allowed set and weight row are interchangeable;
    # sorting makes each group contiguous so canonical ordering applies
    group_key = [(tuple(sorted(banned[i])), d[i].tobytes()) for i in range(k)]
    order = sorted(range(k), key=lambda i: (group_key[i], i))

    options = []
    for i in range(k):
        cols = [j for j in range(n) if j not in banned[i] and d[i, j] > 0]
        cols.sort(key=lambda j: (-d[i, j], j))
        options.append(cols)
    best_of = [(d[i, options[i][0]] if options[i] else 0.0) for i in range(k)]
    suffix_bound = [0.0] * (k + 1)
    for pos in range(k - 1, -1, -1):
        suffix_bound[pos] = suffix_bound[pos + 1] + best_of[order[pos]]

    best_value = -1.0
    best_assign: list[int | None] = [None] * k
    assign: list[int | None] = [None] * k
    nodes = 0

    def rec(pos: int, value: float, covered: frozenset[str], min_rank: int) -> None:
        nonlocal best_value, best_assign, nodes
        nodes += 1
        if nodes > node_cap:
            raise DbrNodeCapError(f"best-response search passed {node_cap} nodes; "
                                  "shrink the instance for the column-generation baseline")
        if value + suffix_bound[pos] <= best_value:
            return
        if pos == k:
            if value > best_value:
                best_value = value
                best_assign = assign.copy()
            return
        i = order[pos]
        same_group = pos > 0 and group_key[order[pos - 1]] == group_key[i]
        start_rank = min_rank if same_group else 0
        for rank in range(start_rank, len(options[i])):
            j = options[i][rank]
            if sched_flights[j] & covered:
                continue
            assign[i] = j
            rec(pos + 1, value + d[i, j], covered | sched_flights[j], rank + 1)
            assign[i] = None
        # leaving this marshal unassigned forces the rest of its group empty
        nxt = pos + 1
        while nxt < k and group_key[order[nxt]] == group_key[i]:
            nxt += 1
        rec(nxt, value, covered, 0)

    rec(0, 0.0, frozenset(), 0)
    matrix = np.zeros((k, n), dtype=np.int64)
    for i, j in enumerate(best_assign):
        if j is not None:
            matrix[i, j] = 1
    return PureStrategy(matrix)


def _dbr_disjoint_packing(inst: FamsInstance, d: np.ndarray, sched_flights,
                          node_cap: int, flight_weights) -> PureStrategy:
    """Branch and bound over weight-sorted schedules for interchangeable
    marshals: each node extends the packing with a later schedule."""
    k = inst.num_marshals
    w_row = d[0]
    order = sorted((j for j in range(len(w_row)) if w_row[j] > 1e-12),
                   key=lambda j: (-w_row[j], j))
    weights = np.array([w_row[j] for j in order])
    flights = [sched_flights[j] for j in order]
    prefix = np.concatenate([[0.0], np.cumsum(weights)])
    total_mass = (sum(flight_weights.get(f.id, 0.0) for f in inst.flights)
                  if flight_weights is not None else np.inf)
    tie_eps = 1e-12 * max(1.0, prefix[-1])

    best_value = 0.0
    best_set: list[int] = []
    chosen: list[int] = []
    nodes = 0

    def suffix_top(t: int, slots: int) -> float:
        hi = min(t + slots, len(weights))
        return prefix[hi] - prefix[t]

    def rec(start: int, slots: int, value: float, covered: frozenset, mass_left: float):
        nonlocal best_value, best_set, nodes
        if value > best_value:
            best_value = value
            best_set = chosen.copy()
        if slots == 0 or start >= len(weights):
            return
        if value + min(suffix_top(start, slots), mass_left) <= best_value + tie_eps:
            return
        for t in range(start, len(weights)):
            nodes += 1
            if nodes > node_cap:
                raise DbrNodeCapError(f"best-response search passed {node_cap} nodes; "
                                      "shrink the instance for the column-generation baseline")
            if value + suffix_top(t, slots) <= best_value + tie_eps:
                return
            if flights[t] & covered:
                continue
            chosen.append(t)
            rec(t + 1, slots - 1, value + weights[t], covered | flights[t],
                mass_left - weights[t])
            chosen.pop()

    rec(0, min(k, len(weights)), 0.0, frozenset(), total_mass)
    matrix = np.zeros((k, len(w_row)), dtype=np.int64)
    for i, t in enumerate(best_set):
        matrix[i, order[t]] = 1
    return PureStrategy(matrix)


@dataclass
class CgResult:
    value: float
    weights: np.ndarray
    strategies: tuple[PureStrategy, ...]
    iterations: int


def fams_column_generation(inst: FamsInstance, tolerance: float = 1e-6,
                           max_iters: int = 1000, node_cap: int = DEFAULT_NODE_CAP,
                           cutoff_s: float | None = None) -> CgResult:
    """Exact zero-sum value by column generation.

    The restricted master is the maximin LP over generated pure strategies
    plus an always-feasible empty allocation; the slave prices columns by
    the master's flight duals through the exact best-response search and
    the loop stops once no column improves by more than ``tolerance``.
    """
    game = encode_fams(inst)
    start = time.monotonic()
    flights = list(inst.flights)
    fcols = {f.id: [j for j, s in enumerate(inst.schedules) if f.id in s.flights]
             for f in flights}
    delta = {f.id: f.u_def - f.u_undef for f in flights}

    def cov_vector(p: PureStrategy) -> np.ndarray:
        return np.array([p.values[:, fcols[f.id]].sum() for f in flights], dtype=float)

    empty = PureStrategy(np.zeros((inst.num_marshals, len(inst.schedules)), dtype=np.int64))
    columns = [empty]
    covs = [cov_vector(empty)]
    floor = min(f.u_undef for f in flights) if flights else 0.0

    for it in range(1, max_iters + 1):
        if cutoff_s is not None and time.monotonic() - start > cutoff_s:
            raise SolveTimeout(cutoff_s)
        m = len(columns)
        prog = LinearProgram(m + 1)
        prog.objective[m] = 1.0
        prog.set_bounds(m, lower=floor)
        for fi, f in enumerate(flights):
            coeffs = {m: 1.0}
            for ci in range(m):
                util = f.u_undef + covs[ci][fi] * delta[f.id]
                if util != 0.0:
                    coeffs[ci] = -util
            prog.add_row(coeffs, "<=", 0.0, label=f"flight {f.id}")
        prog.add_row({ci: 1.0 for ci in range(m)}, "=", 1.0, label="mix")
        sol = solve_lp(prog)
        if sol.status != "optimal":
            raise GameError(f"column-generation master ended {sol.status}")
        y = np.maximum(sol.duals[:len(flights)], 0.0)
        y[y < 1e-10] = 0.0  # dual dust otherwise litters the slave with tie weights
        mu = sol.duals[len(flights)]

        d = np.zeros((inst.num_marshals, len(inst.schedules)))
        masses = {}
        for fi, f in enumerate(flights):
            if y[fi] > 0:
                d[:, fcols[f.id]] += y[fi] * delta[f.id]
                masses[f.id] = y[fi] * delta[f.id]
        column = fams_dbr(inst, d, node_cap=node_cap, flight_weights=masses)
        cov = cov_vector(column)
        slave_value = float(sum(y[fi] * (f.u_undef + cov[fi] * delta[f.id])
                                for fi, f in enumerate(flights)))
        if slave_value <= mu + tolerance:
            weights = np.maximum(sol.values[:m], 0.0)
            weights /= weights.sum()
            return CgResult(float(sol.objective_value), weights, tuple(columns), it)
        if any(np.array_equal(cov, c) for c in covs):
            # the priced column is already present: numerically converged
            weights = np.maximum(sol.values[:m], 0.0)
            weights /= weights.sum()
            return CgResult(float(sol.objective_value), weights, tuple(columns), it)
        columns.append(column)
        covs.append(cov)
    raise GameError(f"column generation did not converge in {max_iters} iterations")
