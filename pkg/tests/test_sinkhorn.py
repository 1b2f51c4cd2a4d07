import numpy as np
import pytest

from conftest import rand_measure
from robust_ot import (DiscreteMeasure, NotConverged, RobustProblem, SinkhornConfig,
                       solve_robust, solve_robust_entropic)


def _config(problem, factor=1e-3):
    return SinkhornConfig(reg=factor * float(problem.cost_matrix().max()))


def test_config_validation():
    for bad in ({"reg": 0.0}, {"reg": -1.0}, {"tol": 0.0}, {"max_iters": 0}):
        with pytest.raises(ValueError):
            SinkhornConfig(**bad)


def test_close_to_exact_small():
    rng = np.random.default_rng(0)
    for eps in (0.0, 0.1, 0.3):
        prob = RobustProblem.symmetric(rand_measure(rng, 5, 2), rand_measure(rng, 5, 2), eps, 2.0)
        approx = solve_robust_entropic(prob, _config(prob))
        exact = solve_robust(prob).value_p
        assert approx.approximate
        assert abs(approx.value_p - exact) <= 0.01 * exact
        # the rounded plan is feasible, so it cannot beat the optimum
        assert approx.value_p >= exact - 1e-12


def test_rounded_plan_is_feasible():
    rng = np.random.default_rng(1)
    mu, nu = rand_measure(rng, 7, 2), rand_measure(rng, 6, 2)
    prob = RobustProblem.symmetric(mu, nu, 0.2, 1.0)
    sol = solve_robust_entropic(prob, _config(prob, 1e-2))
    P = sol.plan_matrix
    assert (P >= 0).all()
    assert np.allclose(P.sum(axis=1) + sol.removed_mu.weights, mu.weights, atol=1e-12)
    assert np.allclose(P.sum(axis=0) + sol.removed_nu.weights, nu.weights, atol=1e-12)
    assert abs(sol.removed_mu.mass - 0.2) < 1e-12


def test_identical_measures():
    mu = DiscreteMeasure(np.eye(3))
    for eps in (0.0, 0.2, 0.5):
        sol = solve_robust_entropic(RobustProblem.symmetric(mu, mu, eps, 1.0),
                                    SinkhornConfig(reg=0.01))
        assert sol.value <= 0.05


def test_deterministic():
    rng = np.random.default_rng(2)
    prob = RobustProblem.symmetric(rand_measure(rng, 8, 2), rand_measure(rng, 8, 2), 0.1, 1.0)
    a = solve_robust_entropic(prob, _config(prob))
    b = solve_robust_entropic(prob, _config(prob))
    assert a.value_p == b.value_p
    assert np.array_equal(a.plan_matrix, b.plan_matrix)


def test_dual_history_monotone():
    rng = np.random.default_rng(3)
    prob = RobustProblem.symmetric(rand_measure(rng, 10, 2), rand_measure(rng, 10, 2), 0.2, 1.0)
    hist = solve_robust_entropic(prob, _config(prob, 1e-2)).info["dual_history"]
    assert len(hist) >= 1
    assert all(b >= a - 1e-12 for a, b in zip(hist, hist[1:]))


def test_not_converged_carries_result():
    rng = np.random.default_rng(4)
    prob = RobustProblem.symmetric(rand_measure(rng, 10, 2), rand_measure(rng, 10, 2), 0.2, 1.0)
    with pytest.raises(NotConverged) as info:
        solve_robust_entropic(prob, SinkhornConfig(reg=1e-4, max_iters=1, tol=1e-14))
    assert info.value.result.approximate
