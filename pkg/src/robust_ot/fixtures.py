"""Constructed instances with known answers, shared by the bench command and tests."""
import numpy as np

from ._validation import check_random_state
from .exact import RobustProblem, solve_robust
from .measures import DiscreteMeasure, GroundCost


def random_measure(rng, n, d):
    w = rng.random(n) + 0.1
    return DiscreteMeasure(rng.standard_normal((n, d)), w / w.sum())


def random_pair(rng, n_max=30, m_max=30, d_max=3, n_min=1):
    """Two random probability measures sharing a dimension."""
    rng = check_random_state(rng)
    n = int(rng.integers(n_min, n_max + 1))
    m = int(rng.integers(n_min, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    return random_measure(rng, n, d), random_measure(rng, m, d)


def far_outlier_huber(seed=0, eps=0.2, n=8, m=8, d=2, distance=100.0):
    """Clean measures in the unit cube plus far outlier atoms.

    Returns ``(mu_tilde, nu_tilde, mu, nu)``. The outliers sit on opposite
    sides at ``distance`` from the cube, much further than its diameter.
    """
    rng = check_random_state(seed)
    mu = DiscreteMeasure(rng.random((n, d)), rng.random(n) + 0.1).normalized()
    nu = DiscreteMeasure(rng.random((m, d)), rng.random(m) + 0.1).normalized()
    shift = np.zeros(d)
    shift[0] = distance
    alpha = DiscreteMeasure.dirac(1.0 + shift, eps)
    beta = DiscreteMeasure.dirac(-shift, eps)
    return mu.scaled(1 - eps) + alpha, nu.scaled(1 - eps) + beta, mu, nu


def recovery_files_pair(eps=0.2, distance=100.0):
    """``(1-eps) delta_0 + eps delta_L`` against ``(1-eps) delta_1 + eps delta_-L``.

    The clean distance is 1, so the robust distance is ``(1-eps)**(1/p)``.
    """
    mu_t = DiscreteMeasure([[0.0], [distance]], [1 - eps, eps])
    nu_t = DiscreteMeasure([[1.0], [-distance]], [1 - eps, eps])
    return mu_t, nu_t


def elbow_instance(eps=0.2, scale=20.0, geometry="triangle"):
    """Far-outlier instance whose radius sweep has a kink at ``eps``.

    The inliers lie in the unit square. With ``geometry="triangle"`` the two
    outliers and the square's corner form an equilateral triangle of side
    ``scale``, so the distance between the outliers is the largest of the
    three outlier distances. With ``"line"`` the outliers sit on opposite
    sides of the square along the first axis.

    Returns ``(mu_tilde, nu_tilde, info)`` where ``info`` holds ``diam`` (of
    the inlier support) and the three outlier distances.
    """
    mu = DiscreteMeasure([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nu = DiscreteMeasure([[0.5, 0.5], [1.0, 1.0], [0.25, 0.75]])
    if geometry == "triangle":
        a = np.array([scale, 0.0])
        b = np.array([scale / 2.0, scale * np.sqrt(3.0) / 2.0])
    elif geometry == "line":
        a = np.array([1.0 + scale, 0.5])
        b = np.array([-scale, 0.5])
    else:
        raise ValueError(f"unknown geometry {geometry!r}")
    S = np.vstack([mu.points, nu.points])
    dist = GroundCost(p=1.0).distance
    info = {
        "diam": float(dist(S, S).max()),
        "d_alpha_S": float(dist(a[None, :], S).min()),
        "d_beta_S": float(dist(b[None, :], S).min()),
        "d_alpha_beta": float(np.linalg.norm(a - b)),
    }
    mu_t = mu.scaled(1 - eps) + DiscreteMeasure.dirac(a, eps)
    nu_t = nu.scaled(1 - eps) + DiscreteMeasure.dirac(b, eps)
    return mu_t, nu_t, info


def breakdown_pair(mu, nu, eps, p=1.0):
    """Contaminations at level ``eps`` that look as close as ``W^{3 eps}(mu, nu)``.

    With ``alpha, beta`` the masses trimmed from ``mu, nu`` at radius
    ``3 eps``, returns ``mu - alpha/3 + beta/3`` and ``nu - beta/3 + alpha/3``.
    """
    sol = solve_robust(RobustProblem.symmetric(mu, nu, 3 * eps, p), potentials=False)
    alpha, beta = sol.removed_mu, sol.removed_nu
    mu_t = _nonneg(mu.points, mu.weights - _on(mu, alpha) / 3.0) + beta.scaled(1 / 3.0)
    nu_t = _nonneg(nu.points, nu.weights - _on(nu, beta) / 3.0) + alpha.scaled(1 / 3.0)
    return mu_t, nu_t


def _on(measure, part):
    # weights of `part` aligned to the atoms of `measure`
    lookup = {x.tobytes(): i for i, x in enumerate(measure.points)}
    w = np.zeros(measure.size)
    for x, m in zip(part.points, part.weights):
        w[lookup[x.tobytes()]] += m
    return w


def _nonneg(points, weights):
    return DiscreteMeasure(points, np.clip(weights, 0.0, None), dim=points.shape[1])
