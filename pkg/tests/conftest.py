import sys

import numpy as np
import pytest
from hypothesis import settings
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, vstack

from robust_ot import DiscreteMeasure, GroundCost

settings.register_profile("ci", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("ci")


def _marginal_rows(n, m):
    idx = np.arange(n * m)
    rows = coo_matrix((np.ones(n * m), (idx // m, idx)), shape=(n, n * m))
    cols = coo_matrix((np.ones(n * m), (idx % m, idx)), shape=(m, n * m))
    return rows, cols


def partial_ot_lp(a, b, C, kept):
    """min <P, C> over P >= 0 with row sums <= a, column sums <= b, total mass ``kept``.

    Independent of the package's flow solver: used as the primal oracle.
    """
    n, m = C.shape
    rows, cols = _marginal_rows(n, m)
    res = linprog(C.ravel(), A_ub=vstack([rows, cols]), b_ub=np.r_[a, b],
                  A_eq=np.ones((1, n * m)), b_eq=[kept], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0
    return res.fun


def robust_lp(mu, nu, eps, p=1.0):
    C = GroundCost(p=p).matrix(mu.points, nu.points)
    return partial_ot_lp(mu.weights, nu.weights, C, 1.0 - eps)


def rand_measure(rng, n, d, spread=1.0):
    w = rng.random(n) + 0.1
    return DiscreteMeasure(spread * rng.standard_normal((n, d)), w / w.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
