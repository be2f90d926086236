import numpy as np
import pytest

from ara.core import GameError, coverage, is_valid_pure
from ara.exact import enumerate_pure
from ara.marginal import solve_marginal
from ara.sampling import EqualityFixFailed, sample_pure, to_pe0
from ara.tsg import (
    CategorySpec,
    ResourceSpec,
    RiskLevel,
    TeamSpec,
    TsgFixer,
    TsgInstance,
    encode_tsg,
    tsg_detection_ratio,
    tsg_fix_equalities,
    tsg_fix_inequalities,
)
from conftest import random_toy_tsg


class TestEncode:
    def test_fig1c_shape(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        assert (game.k, game.n) == (3, 3)
        ineq = [c for c in game.constraints if not c.is_equality]
        eq = [c for c in game.constraints if c.is_equality]
        assert len(ineq) == 2 and len(eq) == 3
        assert len(game.adversary_types) == 2
        caps = {c.name(): c.upper for c in ineq}
        assert caps == {"capacity xray": 7, "capacity md": 15}

    def test_single_team_unique_strategy(self):
        inst = TsgInstance(
            resources=(ResourceSpec("r", 4),),
            teams=(TeamSpec("t", ("r",), 0.7),),
            categories=(CategorySpec("c", "risk", "f", 4, -1.0, -3.0),),
            risk_levels=(RiskLevel("risk", 1.0),))
        game = encode_tsg(inst)
        out = enumerate_pure(game)
        assert len(out.strategies) == 1
        assert coverage(game, out.strategies[0], "c") == pytest.approx(0.7)

    @pytest.mark.parametrize("seed", range(5))
    def test_weights_keep_coverage_below_one(self, seed):
        inst = random_toy_tsg(np.random.default_rng(600 + seed))
        game = encode_tsg(inst)
        for s in enumerate_pure(game, cap=100_000).strategies:
            for c in inst.categories:
                assert coverage(game, s, c.id) <= 1.0 + 1e-12

    def test_multiset_membership_consumes_capacity_per_occurrence(self):
        inst = TsgInstance(
            resources=(ResourceSpec("r", 4),),
            teams=(TeamSpec("t", ("r", "r"), 0.5),),
            categories=(CategorySpec("c", "risk", "f", 2, -1.0, -3.0),),
            risk_levels=(RiskLevel("risk", 1.0),))
        game = encode_tsg(inst)
        cap = next(c for c in game.constraints if c.name() == "capacity r")
        assert cap.coeff((0, 0)) == 2
        m = np.full((1, 1), 2, dtype=np.int64)
        ok, _ = is_valid_pure(game, m)
        assert ok  # 2 units x 2 draws = 4 = capacity
        inst_tight = TsgInstance(
            resources=(ResourceSpec("r", 3),),
            teams=(TeamSpec("t", ("r", "r"), 0.5),),
            categories=(CategorySpec("c", "risk", "f", 2, -1.0, -3.0),),
            risk_levels=(RiskLevel("risk", 1.0),))
        ok, violations = is_valid_pure(encode_tsg(inst_tight), m)
        assert not ok and violations[0].achieved == 4


class TestFixInequalities:
    def test_fig2_overflow_comes_off_the_big_category(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        pe0 = to_pe0(game)
        x = np.array([[2, 3, 3],
                      [0, 0, 0],
                      [0, 0, 12]], dtype=np.int64)  # x-ray rows carry 8 > 7
        out = tsg_fix_inequalities(x, pe0, np.random.default_rng(0), fig1c_tsg)
        assert out[0, 2] == 2  # one unit removed from the 15-passenger column
        assert np.array_equal(x - out, np.array([[0, 0, 1], [0, 0, 0], [0, 0, 0]]))

    def test_no_violation_unchanged(self, fig1c_tsg):
        pe0 = to_pe0(encode_tsg(fig1c_tsg))
        x = np.array([[2, 3, 2], [0, 0, 0], [0, 0, 13]], dtype=np.int64)
        out = tsg_fix_inequalities(x, pe0, np.random.default_rng(0), fig1c_tsg)
        assert np.array_equal(out, x)

    def test_most_violated_resource_first(self):
        # team m uses only b, team z uses both; a is over by 2, b by 1.
        # Draining a first also relieves b, so m keeps both units; fixing b
        # first would have cost m a unit.
        inst = TsgInstance(
            resources=(ResourceSpec("a", 2), ResourceSpec("b", 5)),
            teams=(TeamSpec("m", ("b",), 0.5), TeamSpec("z", ("a", "b"), 0.5)),
            categories=(CategorySpec("c0", "risk", "f0", 6, -1.0, -3.0),),
            risk_levels=(RiskLevel("risk", 1.0),))
        pe0 = to_pe0(encode_tsg(inst))
        x = np.array([[2], [4]], dtype=np.int64)  # a usage 4 > 2, b usage 6 > 5
        out = TsgFixer(inst).fix_inequalities(x, pe0, np.random.default_rng(0))
        assert np.array_equal(out, np.array([[2], [2]]))

    def test_only_decreases(self, fig1c_tsg):
        pe0 = to_pe0(encode_tsg(fig1c_tsg))
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = np.zeros((3, 3), dtype=np.int64)
            for j, cat in enumerate(fig1c_tsg.categories):
                split = rng.multinomial(cat.passengers, [1 / 3] * 3)
                x[:, j] = split
            out = tsg_fix_inequalities(x, pe0, rng, fig1c_tsg)
            assert np.all(out <= x)


class TestFixEqualities:
    def test_fig2_deficit_filled_by_md_team(self, fig1c_tsg):
        pe0 = to_pe0(encode_tsg(fig1c_tsg))
        # after capacity repair: x-ray saturated at 7, third column short one
        x = np.array([[2, 3, 2], [0, 0, 0], [0, 0, 12]], dtype=np.int64)
        out = tsg_fix_equalities(x, pe0, np.random.default_rng(0), fig1c_tsg)
        assert out[2, 2] == 13  # only the md-only team has slack
        assert np.array_equal(out - x, np.array([[0, 0, 0], [0, 0, 0], [0, 0, 1]]))

    def test_satisfied_unchanged(self, fig1c_tsg):
        pe0 = to_pe0(encode_tsg(fig1c_tsg))
        x = np.array([[2, 3, 2], [0, 0, 0], [0, 0, 13]], dtype=np.int64)
        out = tsg_fix_equalities(x, pe0, np.random.default_rng(0), fig1c_tsg)
        assert np.array_equal(out, x)

    def test_least_slack_team_used(self):
        inst = TsgInstance(
            resources=(ResourceSpec("a", 1), ResourceSpec("b", 4)),
            teams=(TeamSpec("ta", ("a",), 0.5), TeamSpec("tb", ("b",), 0.5)),
            categories=(CategorySpec("c", "risk", "f", 1, -1.0, -3.0),),
            risk_levels=(RiskLevel("risk", 1.0),))
        pe0 = to_pe0(encode_tsg(inst))
        x = np.zeros((2, 1), dtype=np.int64)  # deficit 1; slacks are {1, 4}
        out = tsg_fix_equalities(x, pe0, np.random.default_rng(0), inst)
        assert out[0, 0] == 1 and out[1, 0] == 0

    def test_failure_signals_resample(self):
        inst = TsgInstance(
            resources=(ResourceSpec("a", 2), ResourceSpec("b", 2)),
            teams=(TeamSpec("ta", ("a",), 0.5), TeamSpec("tb", ("b",), 0.5)),
            categories=(CategorySpec("c0", "risk", "f0", 2, -1.0, -3.0),
                        CategorySpec("c1", "risk", "f1", 2, -1.0, -3.0)),
            risk_levels=(RiskLevel("risk", 1.0),))
        pe0 = to_pe0(encode_tsg(inst))
        # both resources saturated by the first column; second column short
        x = np.array([[2, 0], [2, 0]], dtype=np.int64)
        with pytest.raises(EqualityFixFailed):
            tsg_fix_equalities(x, pe0, np.random.default_rng(0), inst)

    def test_smaller_categories_filled_first(self):
        # slack 2 and demand 3: ascending order serves the one-passenger
        # category, then fails on the big one; descending order would have
        # failed on the small one instead
        inst = TsgInstance(
            resources=(ResourceSpec("a", 2), ResourceSpec("unused", 5)),
            teams=(TeamSpec("ta", ("a",), 0.5),),
            categories=(CategorySpec("big", "risk", "f0", 2, -1.0, -3.0),
                        CategorySpec("small", "risk", "f1", 1, -1.0, -3.0)),
            risk_levels=(RiskLevel("risk", 1.0),))
        pe0 = to_pe0(encode_tsg(inst))
        x = np.zeros((1, 2), dtype=np.int64)
        with pytest.raises(EqualityFixFailed) as err:
            TsgFixer(inst).fix_equalities(x, pe0, np.random.default_rng(0))
        assert "big" in str(err.value) and "small" not in str(err.value)


class TestDetectionRatio:
    def test_identity_ratio(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        x = np.array([[2.0, 3.0, 0.0], [0, 0, 2.0], [0, 0, 13.0]])
        res = tsg_detection_ratio(x, x, game)
        assert res.min_ratio == pytest.approx(1.0)

    def test_single_category_drop(self):
        inst = TsgInstance(
            resources=(ResourceSpec("r", 30),),
            teams=(TeamSpec("t", ("r",), 0.9),),
            categories=(CategorySpec("c0", "risk", "f0", 10, -1.0, -3.0),
                        CategorySpec("c1", "risk", "f1", 10, -1.0, -3.0)),
            risk_levels=(RiskLevel("risk", 1.0),))
        game = encode_tsg(inst)
        # coverage c0: 0.60 -> 0.55 (weights 0.9/10 per unit)
        before = np.array([[20 / 3, 10.0]])
        after = np.array([[55 / 9, 10.0]])
        res = tsg_detection_ratio(before, after, game)
        assert res.per_category["c0"] == pytest.approx(0.55 / 0.60, abs=1e-9)
        assert res.per_category["c1"] == pytest.approx(1.0)
        assert res.min_ratio == pytest.approx(0.9167, abs=1e-4)

    def test_zero_before_counts_as_unchanged(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        zero = np.zeros((3, 3))
        res = tsg_detection_ratio(zero, zero, game)
        assert res.min_ratio == 1.0

    def test_instrumented_pipeline_run(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        pe0 = to_pe0(game)
        ms = solve_marginal(pe0.game)
        rng = np.random.default_rng(77)
        fixer = TsgFixer(fig1c_tsg)
        for _ in range(100):
            p = sample_pure(ms, pe0, fixer, rng)
            res = tsg_detection_ratio(ms.x_m.values, p.values, game)
            assert res.min_ratio > 0
            for t in game.targets:
                before = coverage(game, ms.x_m.values, t.id)
                after = coverage(game, p.values, t.id)
                assert after >= res.min_ratio * before - 1e-9


class TestObservationTwo:
    def test_unit_decrease_changes_coverage_by_weight(self, fig1c_tsg):
        game = encode_tsg(fig1c_tsg)
        x = np.array([[2.0, 3.0, 2.0], [0, 0, 0], [0, 0, 13.0]])
        for (i, j), cat in ((tuple((0, 2)), fig1c_tsg.categories[2]),):
            before = coverage(game, x, cat.id)
            bumped = x.copy()
            bumped[i, j] -= 1
            after = coverage(game, bumped, cat.id)
            expected = fig1c_tsg.teams[i].effectiveness / cat.passengers
            assert before - after == pytest.approx(expected, abs=1e-12)


class TestPipelineValidity:
    @pytest.mark.parametrize("seed", range(4))
    def test_random_toys_end_to_end(self, seed):
        rng = np.random.default_rng(700 + seed)
        inst = random_toy_tsg(rng)
        game = encode_tsg(inst)
        pe0 = to_pe0(game)
        ms = solve_marginal(pe0.game)
        fixer = TsgFixer(inst)
        for _ in range(100):
            p = sample_pure(ms, pe0, fixer, rng)
            ok, violations = is_valid_pure(game, p)
            assert ok, violations
