import numpy as np
import pytest

from ara.lp import LinearProgram, LpError, solve_lp


def test_single_variable():
    lp = LinearProgram(1, objective=np.array([1.0]))
    lp.add_row({0: 1.0}, "<=", 3.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(3.0)
    assert sol.objective_value == pytest.approx(3.0)


def test_simplex_on_triangle():
    lp = LinearProgram(2, objective=np.array([1.0, 1.0]))
    lp.add_row({0: 1.0, 1: 1.0}, "<=", 1.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(1.0)


def test_infeasible_reports_rows():
    lp = LinearProgram(1)
    lp.add_row({0: 1.0}, "<=", 1.0, label="cap")
    lp.add_row({0: 1.0}, ">=", 2.0, label="floor")
    sol = solve_lp(lp)
    assert sol.status == "infeasible"
    assert "floor" in sol.infeasible_rows


def test_unbounded():
    lp = LinearProgram(1, objective=np.array([1.0]))
    sol = solve_lp(lp)
    assert sol.status == "unbounded"


def test_free_variable_and_equality():
    lp = LinearProgram(2, objective=np.array([1.0, 0.0]))
    lp.set_bounds(0, lower=-np.inf)
    lp.add_row({0: 1.0, 1: 1.0}, "=", -2.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(-2.0)


def test_upper_bounds_become_rows():
    lp = LinearProgram(1, objective=np.array([1.0]))
    lp.set_bounds(0, lower=1.0, upper=4.0)
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(4.0)


def test_iteration_cap_is_named():
    lp = LinearProgram(2, objective=np.array([1.0, 1.0]))
    lp.add_row({0: 1.0, 1: 2.0}, "<=", 4.0)
    lp.add_row({0: 2.0, 1: 1.0}, "<=", 4.0)
    with pytest.raises(LpError, match="cap of 1"):
        solve_lp(lp, iter_cap=1)


def test_resolve_is_bit_identical():
    rng = np.random.default_rng(5)
    lp = LinearProgram(6, objective=rng.normal(size=6))
    for _ in range(4):
        coeffs = {j: float(rng.normal()) for j in range(6)}
        lp.add_row(coeffs, "<=", float(rng.uniform(1, 3)))
    a = solve_lp(lp)
    b = solve_lp(lp)
    assert a.objective_value == b.objective_value
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.duals, b.duals)


def _random_feasible_bounded(rng, n=5, m=4):
    # x0 feasible by construction; the box keeps the program bounded
    lp = LinearProgram(n, objective=rng.uniform(-1, 2, size=n))
    x0 = rng.uniform(0, 1, size=n)
    for _ in range(m):
        a = rng.uniform(-1, 1, size=n)
        slack = rng.uniform(0.1, 1.0)
        lp.add_row({j: a[j] for j in range(n)}, "<=", float(a @ x0 + slack))
    for j in range(n):
        lp.set_bounds(j, lower=0.0, upper=3.0)
    return lp


def _dual_of(lp):
    """Assemble the dual by hand: rows of the primal become variables.

    Primal: max c.x, Ax <= b, 0 <= x <= u.  Treat the box upper bounds as
    rows too, so the dual is min b.y + u.w with A^T y + w >= c, y, w >= 0.
    """
    n = lp.num_vars
    m = len(lp.rows)
    dual = LinearProgram(m + n)
    dual.objective = np.zeros(m + n)
    for i, row in enumerate(lp.rows):
        dual.objective[i] = -row.rhs  # maximize the negated objective
    for j in range(n):
        dual.objective[m + j] = -lp.upper[j]
    for j in range(n):
        coeffs = {m + j: 1.0}
        for i, row in enumerate(lp.rows):
            if j in row.coeffs:
                coeffs[i] = row.coeffs[j]
        dual.add_row(coeffs, ">=", float(lp.objective[j]))
    return dual


@pytest.mark.parametrize("seed", range(8))
def test_strong_duality_spot_check(seed):
    rng = np.random.default_rng(seed)
    lp = _random_feasible_bounded(rng)
    primal = solve_lp(lp)
    assert primal.status == "optimal"
    dual = solve_lp(_dual_of(lp))
    assert dual.status == "optimal"
    assert -dual.objective_value == pytest.approx(primal.objective_value, abs=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_duals_match_shadow_prices(seed):
    rng = np.random.default_rng(100 + seed)
    lp = _random_feasible_bounded(rng)
    sol = solve_lp(lp)
    # complementary slackness: positive dual implies a tight row
    for i, row in enumerate(lp.rows):
        activity = sum(a * sol.values[j] for j, a in row.coeffs.items())
        if sol.duals[i] > 1e-7:
            assert activity == pytest.approx(row.rhs, abs=1e-6)
