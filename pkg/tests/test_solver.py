import math

import numpy as np
import pytest
from scipy import optimize

from appellstop.levy import LevyModel
from appellstop.region import Region
from appellstop.reward import RewardExpr, power_reward, two_sided_reward
from appellstop.solver import (
    EtaMode,
    ScanGrid,
    StoppingProblem,
    check_comonotone,
    image_at,
    image_values,
    infer_eta_mode,
    stopping_region,
    strategy_value,
    value_definition_mc,
    value_mc,
    value_one_sided,
    value_table,
)

X_UPPER = 8.667759410625655
X_LOWER = -16.59405229554123


def problem(g, **kw):
    return StoppingProblem(LevyModel(0.0, 1.0, 0.02), g, infer_eta_mode(g), **kw)


def test_infer_modes():
    assert infer_eta_mode(power_reward(1)).kind == "monotone_sup"
    assert infer_eta_mode(RewardExpr.from_terms([(1, 0, -0.1)])).kind == "monotone_inf"
    m = infer_eta_mode(two_sided_reward(0.1, 0.05))
    assert (m.kind, m.a, m.b) == ("two_sided", 0.1, 0.05)
    assert infer_eta_mode(RewardExpr.from_terms([(1, 2, 0)])).kind == "empirical"


def test_problem_validation():
    with pytest.raises(ValueError):
        ScanGrid(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        ScanGrid(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        problem(power_reward(1), tol=0.0)
    with pytest.raises(ValueError):
        EtaMode("two_sided")
    with pytest.raises(ValueError):
        StoppingProblem(LevyModel(0.1, 1, 0.02), two_sided_reward(0.1, 0.05), EtaMode("two_sided", 0.1, 0.05))


def test_image_at_examples(linear_problem, two_sided_problem):
    for x in (0.0, 3.0, 7.5):
        assert image_at(linear_problem, x) == pytest.approx(x - 5.0, abs=1e-12)
    for x in (0.0, 2.0, 10.0):
        expected = 0.5 * math.exp(0.1 * x) + 1.25 * math.exp(-0.05 * x) - 2
        assert image_at(two_sided_problem, x) == pytest.approx(expected, rel=1e-12)
    const = problem(RewardExpr.from_terms([(1, 0, 0)]))
    assert image_at(const, -3.0) == 1.0


def test_image_values_vectorized(two_sided_problem):
    xs = np.array([-30.0, -10.0, -4.7, -4.6, 0.0, 9.0])
    assert np.allclose(image_values(two_sided_problem, xs), [image_at(two_sided_problem, x) for x in xs],
                       rtol=1e-10, atol=1e-12)


def test_linear_region(linear_problem):
    sol = stopping_region(linear_problem)
    assert len(sol.boundaries) == 1
    assert sol.boundaries[0].x == pytest.approx(5.0, abs=1e-9)
    assert sol.region.intervals[0][1] == math.inf
    assert sol.comonotone.passed


def test_square_region():
    sol = stopping_region(problem(power_reward(2)))
    assert [b.x for b in sol.boundaries] == pytest.approx([10.0], abs=1e-9)


def test_exponential_reward_stops_everywhere():
    sol = stopping_region(problem(RewardExpr.from_terms([(1, 0, 0.1)])))
    assert sol.region == Region.everything() and not sol.boundaries


def test_two_sided_region(two_sided_problem):
    sol = stopping_region(two_sided_problem)
    xs = [b.x for b in sol.boundaries]
    assert xs == pytest.approx([X_LOWER, X_UPPER], abs=1e-8)
    for b in sol.boundaries:
        assert abs(b.residual) <= 1e-10
        eps = 10 * 1e-10 * (1 + abs(b.x))
        assert image_at(two_sided_problem, b.x - eps) * image_at(two_sided_problem, b.x + eps) < 0
    assert sol.region.intervals == ((-math.inf, xs[0]), (xs[1], math.inf))
    assert sol.comonotone.passed
    assert not sol.inconclusive


def test_two_sided_independent_bisection():
    # upper equation (beta - a)/beta e^{ax} + (beta + b)/beta e^{-bx} - 2 = 0
    up = optimize.brentq(lambda x: 0.5 * math.exp(0.1 * x) + 1.25 * math.exp(-0.05 * x) - 2, 0, 20, xtol=1e-14)
    assert up == pytest.approx(X_UPPER, abs=1e-12)


def test_scaling_invariance(two_sided_problem):
    a = stopping_region(two_sided_problem, comonotone=False)
    b = stopping_region(problem(3.0 * two_sided_reward(0.1, 0.05)), comonotone=False)
    assert [x.x for x in a.boundaries] == pytest.approx([x.x for x in b.boundaries], abs=1e-9)


def test_comonotone_reports_witnesses():
    g = RewardExpr.from_terms([(1, 0, 0.1), (-10, 0, 0.09)])
    p = StoppingProblem(LevyModel(0, 1, 0.02), g, EtaMode("monotone_sup"), grid=ScanGrid(-100, 400, 0.5))
    sol = stopping_region(p)
    report = check_comonotone(p, sol, y_grid=np.linspace(-100, 400, 201))
    assert isinstance(report.passed, bool)
    assert all(isinstance(w, float) for w in report.violations)


def test_value_one_sided(linear_problem):
    sol = stopping_region(linear_problem, comonotone=False)
    assert value_one_sided(linear_problem, 0.0, sol) == pytest.approx(5 * math.exp(-1), abs=1e-9)
    assert value_one_sided(linear_problem, 10.0, sol) >= 10.0
    const = problem(RewardExpr.from_terms([(1, 0, 0)]))
    assert value_one_sided(const, -4.0) == pytest.approx(1.0, abs=1e-12)


def test_value_one_sided_rejects_two_sided(two_sided_problem):
    with pytest.raises(ValueError):
        value_one_sided(two_sided_problem, 0.0)


def test_strategy_value_threshold():
    m = LevyModel(0, 1, 0.02)
    g = power_reward(1)
    for b in (3.0, 5.0, 7.0):
        assert strategy_value(m, g, Region.above(b), 0.0) == pytest.approx(b * math.exp(-0.2 * b), rel=1e-14)
    assert strategy_value(m, g, Region(()), 0.0) == 0.0
    assert strategy_value(m, g, Region.above(5.0), 6.0) == 6.0


def test_value_at_least_reward(two_sided_problem):
    sol = stopping_region(two_sided_problem, comonotone=False)
    rows = value_table(two_sided_problem, sol, np.arange(-40.0, 20.0, 0.5))
    for x, g, img, v in rows:
        assert v >= g - 1e-12
        if sol.region.contains(x):
            assert v == pytest.approx(g)


def test_value_mc_linear(linear_problem):
    sol = stopping_region(linear_problem, comonotone=False)
    est = value_mc(linear_problem, 0.0, 20000, 0.01, 5, region=sol.region)
    assert abs(est.estimate - 5 * math.exp(-1)) < 3 * est.stderr + 0.5826 * 0.1 * 0.2 * 5
    inside = value_mc(linear_problem, 6.0, 100, 0.01, 5, region=sol.region)
    assert inside.estimate == 6.0 and inside.stderr == 0.0
    again = value_mc(linear_problem, 0.0, 20000, 0.01, 5, region=sol.region)
    assert again == est


def test_value_definition_mc_linear(linear_problem):
    sol = stopping_region(linear_problem, comonotone=False)
    est = value_definition_mc(linear_problem, 0.0, 20000, 0.01, 6, region=sol.region)
    assert abs(est.estimate - 5 * math.exp(-1)) < 3 * est.stderr + 0.5826 * 0.1 * 1.0
    inside = value_definition_mc(linear_problem, 8.0, 20000, 0.01, 6, region=sol.region)
    assert abs(inside.estimate - 8.0) < 3 * inside.stderr + 0.5826 * 0.1


def test_empirical_mode_runs():
    g = RewardExpr.from_terms([(1, 0, 0.1)])
    p = StoppingProblem(LevyModel(0, 1, 0.5), g, EtaMode("empirical", samples=1000, step=0.05),
                        grid=ScanGrid(-2.0, 2.0, 1.0))
    sol = stopping_region(p, comonotone=False)
    assert sol.region == Region.everything()
    with pytest.raises(ValueError):
        value_definition_mc(p, 0.0, 100, 0.1, 1, region=sol.region)
