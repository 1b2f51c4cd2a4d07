"""Statistical procedures built on the robust distance: minimum-distance
estimation, distance certificates, radius selection, and tests."""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from ._validation import check_exponent, check_points, check_radius, check_random_state
from .exact import RobustProblem, one_sided as _one_sided, solve_robust
from .exceptions import (BeyondBreakdown, EmptyFamily, EmptyInput, InvalidDimensions,
                         InvalidMomentOrder, InvalidRadius, NoElbow, NumericalFailure,
                         RobustOTError, TooLarge)
from .measures import DiscreteMeasure, GroundCost, empirical, sample_family
from .sliced import _parallel_map

MEAN_RESILIENCE_CONSTANT = 4.0
PRODUCT_ATOM_CAP = 40_000
SAMPLING_TERMS = "not computable from data"


class CandidateFamily:
    """A finite, enumerable set of candidate probability measures."""

    def __init__(self, members, kind="finite-list", labels=None):
        members = list(members)
        if not members:
            raise EmptyFamily("candidate family is empty")
        for k, m in enumerate(members):
            if not isinstance(m, DiscreteMeasure):
                raise TypeError(f"member {k} is not a DiscreteMeasure")
            if not m.is_probability:
                raise ValueError(f"member {k} is not a probability measure")
        self.kind = kind
        self._members = tuple(members)
        self.labels = tuple(labels) if labels is not None else tuple(range(len(members)))

    @classmethod
    def finite_list(cls, members):
        return cls(members)

    @classmethod
    def location(cls, template, thetas):
        """Translates ``template + theta`` over a grid of shifts.

        A scalar ``theta`` moves every coordinate by ``theta``.
        """
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas[:, None] * np.ones((1, template.dim))
        if thetas.ndim != 2 or thetas.shape[1] != template.dim:
            raise InvalidDimensions("shift dimension does not match the template")
        members = [DiscreteMeasure(template.points + t, template.weights) for t in thetas]
        labels = [float(t[0]) if np.all(t == t[0]) else tuple(map(float, t)) for t in thetas]
        return cls(members, kind="location-family", labels=labels)

    @classmethod
    def gaussian(cls, sigmas, means, n, d=1, seed=0):
        """Empirical Gaussians over ``sigma x mean`` grids, one fixed seed for all."""
        members, labels = [], []
        for s in sigmas:
            for mvec in means:
                mean = np.broadcast_to(np.asarray(mvec, dtype=float), (d,))
                members.append(sample_family("gaussian", {"sigma": float(s), "d": d,
                                                          "mean": mean}, n, seed))
                labels.append((float(s), tuple(map(float, mean))))
        return cls(members, kind="gaussian", labels=labels)

    def members(self):
        return list(self._members)

    def __len__(self):
        return len(self._members)

    def __getitem__(self, k):
        return self._members[k]


@dataclass(frozen=True)
class SweepCurve:
    taus: np.ndarray
    values_p: np.ndarray
    slopes: np.ndarray
    p: float = 1.0

    @property
    def values(self):
        return np.maximum(self.values_p, 0.0) ** (1.0 / self.p)


@dataclass(frozen=True)
class ResilienceProfile:
    """``rho(eps) = 2 (C_q sigma^p eps^(1 - p/q))^(1/p) + 2 eps^(1/p) sigma``.

    ``C_q`` defaults to 4, an explicit but heuristic choice for the mean
    resilience constant of measures with bounded ``q``-th moment.
    """

    sigma: float
    q: float
    p: float = 1.0
    c_q: float = MEAN_RESILIENCE_CONSTANT

    def __post_init__(self):
        p = check_exponent(self.p)
        object.__setattr__(self, "p", p)
        if not (np.isfinite(self.q) and self.q > p):
            raise InvalidMomentOrder(f"need q > p, got q={self.q}, p={p}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be non-negative")

    def _rho(self, eps):
        if eps == 0:
            return 0.0
        p, q, s = self.p, self.q, self.sigma
        return float(2.0 * (self.c_q * s ** p * eps ** (1.0 - p / q)) ** (1.0 / p)
                     + 2.0 * eps ** (1.0 / p) * s)

    def rho(self, eps):
        eps = check_radius(eps)
        if eps > 0.99:
            raise InvalidRadius("resilience profile needs eps <= 0.99")
        return self._rho(eps)


def resilience_bound(sigma, q, p, eps):
    return ResilienceProfile(sigma, q, p).rho(eps)


def _cost(p, cost):
    if cost is not None:
        return cost
    return GroundCost(p=p)


def mde_scores(mu_tilde, family, p=1.0, eps=0.0, one_sided=False, cost=None, threads=1):
    """Robust distance from ``mu_tilde`` to every family member, in order."""
    if not isinstance(family, CandidateFamily):
        family = CandidateFamily(family)
    eps = check_radius(eps)
    cost = _cost(p, cost)

    def score(member):
        if one_sided:
            # contaminated measure on the left, clean candidate on the right
            return _one_sided(mu_tilde, member, cost=cost, eps=eps, potentials=False).value
        problem = RobustProblem.symmetric(member, mu_tilde, eps, cost=cost)
        return solve_robust(problem, potentials=False).value

    return np.array(_parallel_map(score, family.members(), threads), dtype=float)


def mde(mu_tilde, family, p=1.0, eps=0.0, delta=0.0, one_sided=False, cost=None, threads=1):
    """Minimum-distance estimate over a finite family.

    Returns ``(member, value)`` for the lowest-index member whose distance is
    within ``delta`` of the minimum.
    """
    if not isinstance(family, CandidateFamily):
        family = CandidateFamily(family)
    if not (np.isfinite(delta) and delta >= 0):
        raise ValueError("delta must be non-negative")
    scores = mde_scores(mu_tilde, family, p, eps, one_sided, cost, threads)
    k = int(np.flatnonzero(scores <= scores.min() + delta)[0])
    return family[k], float(scores[k])


class Certificate(NamedTuple):
    estimate: float
    additive_bound: float
    multiplicative_bound: float

    def to_dict(self):
        return {
            "statistic": self.estimate,
            "threshold": None,
            "decision": None,
            "bounds": {"additive": self.additive_bound,
                       "multiplicative": self.multiplicative_bound,
                       "sampling": SAMPLING_TERMS},
            "warnings": [],
        }


def robust_distance_certificate(mu_tilde_n, nu_tilde_n, p, eps, profile, cost=None):
    """Robust estimate of the clean distance with its error budget.

    The clean distance ``W`` obeys ``|estimate - W| <= additive +
    multiplicative * W`` plus sampling terms ``W_p(mu, mu_n)`` and
    ``W_p(nu, nu_n)`` that cannot be computed from data.
    """
    eps = check_radius(eps)
    p = check_exponent(p)
    if eps >= 1.0 / 3.0:
        raise BeyondBreakdown(
            "eps >= 1/3: meaningful robust estimation guarantees are impossible, "
            "an adversary can make two far-apart distributions look identical")
    estimate = solve_robust(RobustProblem.symmetric(mu_tilde_n, nu_tilde_n, eps,
                                                    cost=_cost(p, cost)),
                            potentials=False).value
    additive = 2.0 * profile._rho(3.0 * eps)
    multiplicative = 1.0 - (1.0 - 3.0 * eps) ** (1.0 / p)
    return Certificate(float(estimate), float(additive), float(multiplicative))


def _check_grid(taus):
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if taus.size == 0:
        raise ValueError("empty radius grid")
    if not np.all(np.isfinite(taus)) or taus[0] < 0 or taus[-1] >= 1:
        raise InvalidRadius("radius grid must lie in [0, 1)")
    if np.any(np.diff(taus) <= 0):
        raise InvalidRadius("radius grid must be strictly increasing")
    return taus


def sweep_radius(mu_tilde, nu_tilde, p, tau_grid, cost=None, threads=1):
    """``W_p^tau(mu_tilde, nu_tilde)^p`` along a grid of radii, with forward slopes."""
    taus = _check_grid(tau_grid)
    cost = _cost(p, cost)

    def solve(tau):
        try:
            return solve_robust(RobustProblem.symmetric(mu_tilde, nu_tilde, tau, cost=cost),
                                potentials=False).value_p
        except RobustOTError as exc:
            raise NumericalFailure(f"solve failed at tau={tau!r}: {exc}") from exc

    values = np.array(_parallel_map(solve, taus, threads), dtype=float)
    slack = 1e-9 * (1.0 + np.abs(values[:-1]))
    bad = np.flatnonzero(values[1:] > values[:-1] + slack)
    if bad.size:
        k = int(bad[0])
        raise NumericalFailure(
            f"sweep not monotone between tau={taus[k]!r} and tau={taus[k + 1]!r}")
    slopes = np.diff(values) / np.diff(taus)
    return SweepCurve(taus=taus, values_p=values, slopes=slopes, p=cost.p)


@dataclass(frozen=True)
class ElbowDiagnostics:
    curvature_eps: float
    threshold_eps: Optional[float]
    second_differences: np.ndarray
    rule: str


def detect_elbow(curve, threshold=None):
    """Locate the kink of a radius sweep.

    Without ``threshold`` the answer is the grid point where the slope jumps
    the most (largest second difference). With ``threshold`` (for instance
    ``-diam(S)**p``) it is the first radius whose forward slope exceeds it.
    """
    taus, slopes = np.asarray(curve.taus), np.asarray(curve.slopes)
    if taus.size < 4:
        raise ValueError("elbow detection needs at least 4 grid points")
    if np.all(np.abs(slopes) <= 1e-12):
        raise NoElbow("sweep curve is flat")
    jumps = np.diff(slopes)
    curv = float(taus[1 + int(np.argmax(jumps))])
    thr = None
    if threshold is not None:
        hits = np.flatnonzero(slopes > threshold)
        if hits.size == 0:
            raise NoElbow(f"no slope exceeds the threshold {threshold!r}")
        thr = float(taus[int(hits[0])])
    diag = ElbowDiagnostics(curvature_eps=curv, threshold_eps=thr,
                            second_differences=jumps,
                            rule="threshold" if threshold is not None else "curvature")
    return (thr if threshold is not None else curv), diag


@dataclass(frozen=True)
class TestDecision:
    statistic: float
    threshold: float
    reject: bool
    warnings: List[str] = field(default_factory=list)

    __test__ = False

    @property
    def decision(self):
        return "reject" if self.reject else "accept"

    def to_dict(self):
        return {"statistic": self.statistic, "threshold": self.threshold,
                "decision": self.decision,
                "bounds": {"additive": None, "multiplicative": None},
                "warnings": list(self.warnings)}


def _decide(statistic, eps, rho):
    if not (np.isfinite(rho) and rho >= 0):
        raise ValueError("rho must be non-negative")
    warnings = []
    if eps > 0.25:
        warnings.append("guarantee_void")
    threshold = 3.0 * float(rho)
    return TestDecision(float(statistic), threshold, bool(statistic > threshold), warnings)


def two_sample_test(mu_tilde_n, nu_tilde_n, p, eps, rho, cost=None):
    """Reject equality when the robust distance exceeds ``3 rho``.

    The guarantee needs ``eps <= 1/4``; above that the decision carries a
    ``guarantee_void`` warning.
    """
    eps = check_radius(eps)
    stat = solve_robust(RobustProblem.symmetric(mu_tilde_n, nu_tilde_n, eps,
                                                cost=_cost(p, cost)),
                        potentials=False).value
    return _decide(stat, eps, rho)


def _pair_arrays(pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and not np.isscalar(pairs[0]):
        X, Y = pairs
    else:
        pairs = list(pairs)
        if not pairs:
            raise EmptyInput("no pairs given")
        X = [pr[0] for pr in pairs]
        Y = [pr[1] for pr in pairs]
    X = check_points(X)
    Y = check_points(Y)
    if X.shape[0] != Y.shape[0]:
        raise InvalidDimensions("x and y sample counts differ")
    return X, Y


def independence_measures(pairs, max_atoms=PRODUCT_ATOM_CAP, subsample=True, seed=0):
    """Joint empirical measure and product of its marginals (maybe subsampled)."""
    X, Y = _pair_arrays(pairs)
    n = X.shape[0]
    joint = empirical(np.hstack([X, Y]))
    if n * n <= max_atoms:
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i, j = i.reshape(-1), j.reshape(-1)
    elif not subsample:
        raise TooLarge(f"product measure has {n * n} atoms, cap is {max_atoms}")
    else:
        rng = check_random_state(seed)
        i = rng.integers(0, n, size=max_atoms)
        j = rng.integers(0, n, size=max_atoms)
    product = empirical(np.hstack([X[i], Y[j]]))
    return joint, product, X.shape[1]


def independence_test(pairs, p, eps, rho, max_atoms=PRODUCT_ATOM_CAP, subsample=True,
                      seed=0):
    """Robust distance between the joint law and the product of its marginals.

    The product space carries the metric ``max(d(x, x'), d(y, y'))``.
    """
    eps = check_radius(eps)
    joint, product, split = independence_measures(pairs, max_atoms, subsample, seed)
    cost = GroundCost(p=p, metric="product-max", split=split)
    stat = solve_robust(RobustProblem.symmetric(joint, product, eps, cost=cost),
                        potentials=False).value
    return _decide(stat, eps, rho)
