"""Dependent rounding of marginal solutions into valid pure strategies.

The pipeline normalizes a game into partitioned-equality form (every cell
in exactly one equality constraint, all inequalities with lower bound 0),
comb-samples each equality group so the group sum survives rounding, then
hands the integral matrix to domain fixers that repair inequalities by
decreasing cells and equalities by increasing them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ara.core import (
    AraGame,
    AssignmentConstraint,
    GameError,
    MarginalStrategy,
    MixedStrategyEstimate,
    PureStrategy,
    Violation,
    game_value,
)
from ara.marginal import MarginalSolution

COMB_SUM_TOL = 1e-6
DEFAULT_RETRY_CAP = 100


class Pe0StructureError(GameError):
    """Equalities cannot be arranged into a partition of the matrix."""


class EqualityFixFailed(Exception):
    """A domain fixer could not restore an equality; resample instead."""


class SamplingFailure(Exception):
    def __init__(self, failures: int, retry_cap: int):
        self.failures = failures
        self.retry_cap = retry_cap
        super().__init__(f"equality repair failed {failures} times; retry cap {retry_cap} exhausted")


class DomainFixer(Protocol):
    def fix_inequalities(self, x: np.ndarray, pe0: "Pe0Form", rng: np.random.Generator) -> np.ndarray: ...

    def fix_equalities(self, x: np.ndarray, pe0: "Pe0Form", rng: np.random.Generator) -> np.ndarray: ...


@dataclass(frozen=True)
class Pe0Form:
    """A game whose equality constraints partition the allocation matrix.

    ``game`` may carry one extra slack column relative to ``source_game``;
    ``source_cols`` says how many columns to keep when mapping samples back.
    """

    game: AraGame
    equality_partition: tuple[AssignmentConstraint, ...]
    inequalities: tuple[AssignmentConstraint, ...]
    source_game: AraGame
    source_cols: int

    def __post_init__(self):
        covered: set = set()
        for con in self.equality_partition:
            if not con.is_equality:
                raise Pe0StructureError(f"{con.name()} is not an equality")
            overlap = covered & con.cells
            if overlap:
                raise Pe0StructureError(f"{con.name()} overlaps the partition at {sorted(overlap)[0]}")
            covered |= con.cells
        every = {(i, j) for i in range(self.game.k) for j in range(self.game.n)}
        if covered != every:
            missing = sorted(every - covered)[0]
            raise Pe0StructureError(f"equalities do not cover cell {missing}")
        for con in self.inequalities:
            if con.lower != 0:
                raise Pe0StructureError(f"{con.name()} has nonzero lower bound {con.lower}")

    def strip(self, matrix: np.ndarray) -> np.ndarray:
        return matrix[:, :self.source_cols]


def to_pe0(game: AraGame) -> Pe0Form:
    """Normalize a game into partitioned-equality form.

    Games whose positive equalities already partition the matrix pass
    through unchanged.  Games with per-row budget inequalities get a shared
    dummy column holding one slack cell per asset, turning each row budget
    into an equality; a slack cell of one marks the asset unallocated.
    Zero-fixing equalities are kept as upper-bound-zero inequalities.
    """
    eqs = [c for c in game.constraints if c.is_equality and c.lower > 0]
    ineqs = [c for c in game.constraints if not (c.is_equality and c.lower > 0)]
    for con in ineqs:
        if con.lower != 0 and con.lower != con.upper:
            raise Pe0StructureError(f"{con.name()} has lower bound {con.lower}; "
                                    "only 0 or equality bounds are supported")

    if eqs:
        covered: set = set()
        for con in eqs:
            overlap = covered & con.cells
            if overlap:
                raise Pe0StructureError(f"equalities {con.name()} overlap at {sorted(overlap)[0]}")
            covered |= con.cells
        every = {(i, j) for i in range(game.k) for j in range(game.n)}
        if covered != every:
            missing = sorted(every - covered)[0]
            raise Pe0StructureError(f"equalities do not cover cell {missing}")
        return Pe0Form(game, tuple(eqs), tuple(ineqs), game, game.n)

    # Row-budget form: every row needs one inequality over exactly its cells.
    row_budget: dict[int, AssignmentConstraint] = {}
    others = []
    for con in ineqs:
        rows = {i for i, _ in con.cells}
        if (len(rows) == 1 and len(con.cells) == game.n and not con.is_equality
                and next(iter(rows)) not in row_budget):
            row_budget[next(iter(rows))] = con
        else:
            others.append(con)
    if set(row_budget) != set(range(game.k)):
        missing = sorted(set(range(game.k)) - set(row_budget))[0]
        raise Pe0StructureError(f"row {missing} has no full-row budget constraint to turn "
                                "into a partition equality")

    n_ext = game.n + 1
    equalities = []
    for i in range(game.k):
        budget = row_budget[i]
        cells = frozenset((i, j) for j in range(n_ext))
        equalities.append(AssignmentConstraint(cells, budget.upper, budget.upper,
                                               label=f"{budget.name()} (with slack)"))
    carried = [AssignmentConstraint(c.cells, c.lower, c.upper, c.label, c.coeffs) for c in others]
    ext = AraGame(game.k, n_ext, tuple(equalities) + tuple(carried), game.targets,
                  game.adversary_types, max_targets_factor=game.max_targets_factor,
                  validate_weights=False)
    return Pe0Form(ext, tuple(equalities), tuple(carried), game, game.n)


def comb_sample(x_m, S: AssignmentConstraint, rng: np.random.Generator) -> dict:
    """Round the cells of one equality group up or down, preserving its sum.

    Fractional parts are packed in ascending cell order into unit buckets;
    a single uniform draw marks the same offset in every bucket and the
    cell whose fraction covers the mark is rounded up.  Each cell keeps its
    marginal value in expectation and the group sum is preserved exactly.
    """
    values = x_m.values if isinstance(x_m, MarginalStrategy) else np.asarray(x_m, dtype=float)
    cells = S.sorted_cells()
    vals = np.array([values[c] for c in cells])
    rounded = _comb_round(vals, rng)
    return {cell: int(v) for cell, v in zip(cells, rounded)}


def _comb_round(vals: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    floors = np.floor(vals)
    frac = vals - floors
    snap = frac > 1.0 - 1e-7
    floors[snap] += 1.0
    frac[snap] = 0.0
    frac[frac < 1e-7] = 0.0
    total = frac.sum()
    buckets = int(round(total))
    if abs(total - buckets) > COMB_SUM_TOL:
        raise GameError(f"fractional mass {total} is not integral within {COMB_SUM_TOL}")
    out = floors.astype(np.int64)
    if buckets == 0:
        return out
    cum = np.cumsum(frac)
    z = rng.random()
    marks = np.minimum(np.arange(buckets) + z, cum[-1] - 1e-12)
    hits = np.searchsorted(cum, marks, side="right")
    np.add.at(out, np.minimum(hits, len(out) - 1), 1)
    return out


class _PartitionSampler:
    """Index arrays for comb sampling a fixed equality partition."""

    def __init__(self, pe0: Pe0Form):
        self.shape = (pe0.game.k, pe0.game.n)
        self.groups = []
        for con in pe0.equality_partition:
            cells = con.sorted_cells()
            rows = np.fromiter((c[0] for c in cells), dtype=np.int64, count=len(cells))
            cols = np.fromiter((c[1] for c in cells), dtype=np.int64, count=len(cells))
            self.groups.append((rows, cols))

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int64)
        for rows, cols in self.groups:
            out[rows, cols] = _comb_round(x[rows, cols], rng)
        return out


class _FastChecker:
    """Constraint sums via index arrays; exact integer validity check."""

    def __init__(self, game: AraGame):
        self.specs = []
        for con in game.constraints:
            cells = con.sorted_cells()
            rows = np.fromiter((c[0] for c in cells), dtype=np.int64, count=len(cells))
            cols = np.fromiter((c[1] for c in cells), dtype=np.int64, count=len(cells))
            coeffs = np.fromiter((con.coeff(c) for c in cells), dtype=np.int64, count=len(cells))
            unit = bool(np.all(coeffs == 1))
            self.specs.append((rows, cols, coeffs, unit, con.lower, con.upper, con.name()))

    def violations(self, x: np.ndarray) -> list[Violation]:
        out = []
        for rows, cols, coeffs, unit, lo, hi, name in self.specs:
            picked = x[rows, cols]
            v = int(picked.sum()) if unit else int((picked * coeffs).sum())
            if v < lo or v > hi:
                out.append(Violation(name, v, lo, hi))
        return out


def _comb_sample_matrix(pe0: Pe0Form, x_m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One fresh uniform draw per equality constraint, in partition order."""
    return _PartitionSampler(pe0).sample(x_m, rng)


def _marginal_on_pe0(ms: MarginalSolution, pe0: Pe0Form) -> np.ndarray:
    """Extend the marginal with slack-column values when the form added one."""
    x = ms.x_m.values
    if x.shape == (pe0.game.k, pe0.game.n):
        return x
    if x.shape != (pe0.source_game.k, pe0.source_game.n):
        raise GameError(f"marginal shape {x.shape} matches neither the source nor the PE0 game")
    ext = np.zeros((pe0.game.k, pe0.game.n))
    ext[:, :pe0.source_cols] = x
    for con in pe0.equality_partition:
        short = con.lower - con.value(ext)
        slack_cells = [c for c in con.sorted_cells() if c[1] >= pe0.source_cols]
        if slack_cells:
            ext[slack_cells[0]] = max(0.0, short)
    return ext


class _SampleContext:
    def __init__(self, ms: MarginalSolution, pe0: Pe0Form):
        self.x_ext = _marginal_on_pe0(ms, pe0)
        self.sampler = _PartitionSampler(pe0)
        self.checker = _FastChecker(pe0.source_game)


def _sample_with_stats(ctx: _SampleContext, pe0: Pe0Form, fixer: DomainFixer,
                       rng: np.random.Generator, retry_cap: int) -> tuple[np.ndarray, int]:
    failures = 0
    for _ in range(retry_cap + 1):
        x = ctx.sampler.sample(ctx.x_ext, rng)
        fixed = fixer.fix_inequalities(x, pe0, rng)
        if np.any(fixed > x):
            raise GameError("inequality fixer increased a cell")
        try:
            done = fixer.fix_equalities(fixed, pe0, rng)
        except EqualityFixFailed:
            failures += 1
            continue
        if np.any(done < fixed):
            raise GameError("equality fixer decreased a cell")
        candidate = pe0.strip(done)
        bad = ctx.checker.violations(candidate)
        if bad:
            raise GameError("fixers produced an invalid strategy: "
                            + "; ".join(map(str, bad)))
        return candidate, failures
    raise SamplingFailure(failures, retry_cap)


def sample_pure(ms: MarginalSolution, pe0: Pe0Form, fixer: DomainFixer,
                rng: np.random.Generator, retry_cap: int = DEFAULT_RETRY_CAP) -> PureStrategy:
    """Draw one valid pure strategy for the source game, resampling with
    fresh randomness when equality repair fails."""
    matrix, _ = _sample_with_stats(_SampleContext(ms, pe0), pe0, fixer, rng, retry_cap)
    return PureStrategy(matrix)


@dataclass(frozen=True)
class EstimateResult:
    estimate: MixedStrategyEstimate
    value: float
    sample_failures: int


def estimate_mixed(ms: MarginalSolution, pe0: Pe0Form, fixer: DomainFixer,
                   rng: np.random.Generator, m: int,
                   retry_cap: int = DEFAULT_RETRY_CAP) -> EstimateResult:
    """Average m sampled pure strategies and evaluate the source game on the
    averaged matrix."""
    if m < 1:
        raise GameError("need at least one sample")
    ctx = _SampleContext(ms, pe0)
    samples = []
    failures = 0
    for _ in range(m):
        matrix, f = _sample_with_stats(ctx, pe0, fixer, rng, retry_cap)
        samples.append(PureStrategy(matrix))
        failures += f
    est = MixedStrategyEstimate.from_samples(samples)
    return EstimateResult(est, game_value(pe0.source_game, est.mean), failures)
