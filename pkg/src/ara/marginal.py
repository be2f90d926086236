"""Build and solve the marginal relaxation LP for an allocation game.

The LP maximizes the probability-weighted worst-case defender utility over
the marginal polytope, which contains every mixed strategy, so its optimum
upper-bounds the true game value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ara.core import AraGame, GameError, MARGINAL_TOL, MarginalStrategy, constraint_violations, defender_utility
from ara.lp import LinearProgram, solve_lp


class GameInfeasibleError(GameError):
    def __init__(self, rows):
        self.rows = tuple(rows)
        super().__init__("assignment constraints are infeasible: " + "; ".join(self.rows))


@dataclass(frozen=True)
class MarginalSolution:
    x_m: MarginalStrategy
    upper_bound: float
    per_type_values: dict[str, float]


def solve_marginal(game: AraGame) -> MarginalSolution:
    """Maximize sum_theta p_theta z_theta over the marginal polytope.

    Coverage terms are substituted inline rather than held as separate LP
    variables.  Raises GameInfeasibleError naming the constraint rows the
    LP could not satisfy.
    """
    kn = game.k * game.n
    active = [a for a in game.adversary_types if a.probability > 0.0 and a.targets]
    prog = LinearProgram(kn + len(active))

    def col(cell):
        return cell[0] * game.n + cell[1]

    for ti, a in enumerate(active):
        z = kn + ti
        prog.objective[z] = a.probability
        # z is at least the worst undefended payoff, which keeps the
        # initial slack basis feasible without an artificial variable.
        floor = min(game.target(t).payoff_undefended for t in a.targets)
        prog.set_bounds(z, lower=floor)
        for tid in sorted(a.targets):
            t = game.target(tid)
            coeffs = {z: 1.0}
            delta = t.payoff_defended - t.payoff_undefended
            for cell, w in t.weights.items():
                if w * delta != 0.0:
                    coeffs[col(cell)] = coeffs.get(col(cell), 0.0) - w * delta
            prog.add_row(coeffs, "<=", t.payoff_undefended, label=f"target {tid}")

    for con in game.constraints:
        coeffs = {col(c): float(con.coeff(c)) for c in con.cells}
        if con.is_equality:
            prog.add_row(coeffs, "=", con.lower, label=con.name())
        else:
            prog.add_row(coeffs, "<=", con.upper, label=f"{con.name()} upper")
            if con.lower > 0:
                prog.add_row(coeffs, ">=", con.lower, label=f"{con.name()} lower")

    sol = solve_lp(prog)
    if sol.status == "infeasible":
        raise GameInfeasibleError(sol.infeasible_rows)
    if sol.status != "optimal":
        raise GameError(f"marginal LP ended {sol.status}")

    x = np.maximum(sol.values[:kn].reshape(game.k, game.n), 0.0)
    bad = constraint_violations(game, x, tol=MARGINAL_TOL)
    if bad:
        raise GameError("marginal solution violates constraints: " + "; ".join(map(str, bad)))
    x_m = MarginalStrategy(x)

    per_type = {a.id: min(defender_utility(game, x, t) for t in sorted(a.targets))
                if a.targets else 0.0
                for a in game.adversary_types}
    upper = sum(a.probability * per_type[a.id] for a in game.adversary_types)
    if abs(upper - sol.objective_value) > 1e-6 * max(1.0, abs(upper)):
        raise GameError(f"marginal objective {sol.objective_value} disagrees with "
                        f"recomputed bound {upper}")
    return MarginalSolution(x_m, float(upper), per_type)
