"""Discrete measures, ground costs and contamination models.

A :class:`DiscreteMeasure` is a finite weighted point cloud in R^d. Its total
mass need not be one: sub-measures produced by the robust solvers (the mass
that was trimmed away, for instance) are ordinary ``DiscreteMeasure`` objects
too.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ._validation import check_exponent, check_points, check_radius, check_random_state
from .exceptions import (
    EmptyInput,
    InvalidDimensions,
    MassMismatch,
    UnknownFamily,
    Unsupported,
)

MASS_TOL = 1e-9


def _merge_duplicates(points, weights):
    # exact coordinate equality; first-occurrence order is kept
    if points.shape[0] <= 1:
        return points, weights
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if first.size == points.shape[0]:
        return points, weights
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    merged = np.zeros(first.size)
    np.add.at(merged, rank[inverse], weights)
    return points[first[order]], merged


class DiscreteMeasure:
    """Finite nonnegative measure ``sum_i weights[i] * delta(points[i])``.

    Duplicate points are merged on construction by summing their weights and
    atoms of zero weight are dropped. Instances are immutable.

    Parameters
    ----------
    points : array-like, shape (n, d) or (n,)
        Atom locations. A 1-D array is read as n points in R^1.
    weights : array-like, shape (n,), optional
        Nonnegative atom masses. Defaults to uniform weights ``1/n``.
    dim : int, optional
        Ambient dimension; only needed to build an empty (zero) measure.
    """

    __slots__ = ("_points", "_weights")

    def __init__(self, points, weights=None, dim=None):
        if points is None or (np.size(points) == 0 and dim is not None):
            pts = np.zeros((0, int(dim or 1)))
            w = np.zeros(0)
        else:
            pts = check_points(points, dim)
            if weights is None:
                w = np.full(pts.shape[0], 1.0 / pts.shape[0])
            else:
                w = np.asarray(weights, dtype=float).reshape(-1)
                if w.shape[0] != pts.shape[0]:
                    raise InvalidDimensions(
                        f"{pts.shape[0]} points but {w.shape[0]} weights")
                if not np.all(np.isfinite(w)):
                    raise ValueError("weights contain NaN or Inf")
                if np.any(w < 0):
                    raise ValueError("weights must be nonnegative")
            keep = w > 0
            if not np.all(keep):
                pts, w = pts[keep], w[keep]
            pts, w = _merge_duplicates(pts, w)
        pts = np.ascontiguousarray(pts, dtype=float)
        w = np.ascontiguousarray(w, dtype=float)
        pts.setflags(write=False)
        w.setflags(write=False)
        self._points = pts
        self._weights = w

    @classmethod
    def zero(cls, dim):
        return cls(None, dim=dim)

    @classmethod
    def dirac(cls, x, mass=1.0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x[None, :], [mass])

    @property
    def points(self):
        return self._points

    @property
    def weights(self):
        return self._weights

    @property
    def mass(self):
        return float(self._weights.sum())

    @property
    def dim(self):
        return self._points.shape[1]

    @property
    def size(self):
        return self._points.shape[0]

    @property
    def is_probability(self):
        return abs(self.mass - 1.0) <= MASS_TOL

    def scaled(self, factor):
        """Return ``factor * self``."""
        return DiscreteMeasure(self._points, self._weights * float(factor), dim=self.dim)

    def normalized(self):
        return self.scaled(1.0 / self.mass)

    def mean(self):
        return self._weights @ self._points / self.mass

    def __add__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        if other.dim != self.dim:
            raise InvalidDimensions("cannot add measures of different dimension")
        return DiscreteMeasure(
            np.vstack([self._points, other._points]),
            np.concatenate([self._weights, other._weights]),
            dim=self.dim,
        )

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (self._points.shape == other._points.shape
                and np.array_equal(self._points, other._points)
                and np.array_equal(self._weights, other._weights))

    def __hash__(self):
        return hash((self._points.tobytes(), self._weights.tobytes()))

    def __repr__(self):
        return f"DiscreteMeasure(size={self.size}, dim={self.dim}, mass={self.mass:.6g})"

    def to_dict(self):
        return {"points": self._points.tolist(), "weights": self._weights.tolist()}


@dataclass(frozen=True)
class GroundCost:
    """Cost ``d(x, y) ** p``.

    ``metric="euclidean"`` is the default. ``metric="product-max"`` is the
    metric ``max(|x_a - y_a|, |x_b - y_b|)`` on a product space whose first
    ``split`` coordinates form the first factor; it is used by the
    independence test.
    """

    p: float = 1.0
    metric: str = "euclidean"
    split: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "p", check_exponent(self.p))
        if self.metric not in ("euclidean", "product-max"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric == "product-max" and (self.split is None or self.split < 1):
            raise ValueError("product-max metric needs split >= 1")

    def distance(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if self.metric == "euclidean":
            return _euclidean(X, Y)
        s = self.split
        return np.maximum(_euclidean(X[:, :s], Y[:, :s]), _euclidean(X[:, s:], Y[:, s:]))

    def matrix(self, X, Y):
        """Pairwise cost matrix between point arrays ``X`` (n, d) and ``Y`` (m, d)."""
        D = self.distance(X, Y)
        if self.p == 1.0:
            return D
        if self.p == 2.0:
            return D * D
        return D ** self.p


def _euclidean(X, Y):
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


OutlierSource = Union[DiscreteMeasure, Callable[[np.random.Generator, int], np.ndarray]]


@dataclass(frozen=True)
class ContaminationSpec:
    """How an adversary corrupts a clean empirical measure.

    ``model`` is ``"huber"`` (mix in ``eps`` mass of the outlier law) or
    ``"strong-replacement"`` (replace ``floor(eps * n)`` of the ``n`` samples).
    ``outlier_source`` is either a probability measure or a callable
    ``(rng, k) -> (k, d) array`` drawing outlier locations.
    """

    model: str
    eps: float
    outlier_source: OutlierSource
    seed: int = 0
    n_outliers: Optional[int] = None

    def __post_init__(self):
        if self.model not in ("huber", "strong-replacement"):
            raise ValueError(f"unknown contamination model {self.model!r}")
        object.__setattr__(self, "eps", check_radius(self.eps))


def uniform_box(low, high):
    """Outlier generator drawing uniformly from the box ``[low, high]``."""
    low = np.atleast_1d(np.asarray(low, dtype=float))
    high = np.atleast_1d(np.asarray(high, dtype=float))

    def draw(rng, k):
        return rng.uniform(low, high, size=(k, low.size))

    return draw


def empirical(samples):
    """Empirical measure of a list of samples (uniform weights, duplicates merged)."""
    if samples is None or len(samples) == 0:
        raise EmptyInput("empirical measure of an empty sample list")
    pts = check_points(samples)
    return DiscreteMeasure(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))


def _as_sample_list(measure, max_n=10**6):
    # recover the multiset of samples behind an empirical measure
    w = measure.weights / measure.mass
    n = int(round(1.0 / w.min()))
    while n <= max_n:
        counts = w * n
        rounded = np.rint(counts)
        if np.all(np.abs(counts - rounded) <= 1e-7) and rounded.sum() == n:
            return np.repeat(measure.points, rounded.astype(int), axis=0)
        n += int(round(1.0 / w.min()))
    raise Unsupported("strong replacement needs weights that are multiples of 1/n")


def _draw_outliers(source, rng, k, dim):
    if isinstance(source, DiscreteMeasure):
        idx = rng.choice(source.size, size=k, p=source.weights / source.mass)
        return source.points[idx]
    pts = np.asarray(source(rng, k), dtype=float).reshape(k, -1)
    if pts.shape[1] != dim:
        raise InvalidDimensions("outlier generator returned the wrong dimension")
    return pts


def contaminate(mu_hat, spec):
    """Corrupt ``mu_hat`` according to ``spec``.

    The result is within total variation ``spec.eps`` of ``mu_hat`` and is a
    deterministic function of ``spec.seed``.
    """
    if not mu_hat.is_probability:
        raise MassMismatch("contaminate expects a probability measure")
    eps = check_radius(spec.eps)
    if eps == 0.0:
        return mu_hat
    rng = check_random_state(spec.seed)
    if spec.model == "huber":
        source = spec.outlier_source
        if not isinstance(source, DiscreteMeasure):
            k = spec.n_outliers or max(1, mu_hat.size)
            source = empirical(_draw_outliers(source, rng, k, mu_hat.dim))
        elif not source.is_probability:
            raise MassMismatch("outlier measure must be a probability measure")
        return mu_hat.scaled(1.0 - eps) + source.scaled(eps)

    samples = _as_sample_list(mu_hat)
    n = samples.shape[0]
    k = int(np.floor(eps * n + 1e-9))
    if k == 0:
        return mu_hat
    center = mu_hat.mean()
    dist = np.linalg.norm(samples - center, axis=1)
    # farthest first; stable sort keeps the original order on ties
    victims = np.argsort(-dist, kind="stable")[:k]
    corrupted = samples.copy()
    corrupted[victims] = _draw_outliers(spec.outlier_source, rng, k, mu_hat.dim)
    return empirical(corrupted)


def _aligned_weights(mu, nu):
    if mu.dim != nu.dim:
        raise InvalidDimensions("measures live in different dimensions")
    pts = np.vstack([mu.points, nu.points])
    if pts.shape[0] == 0:
        return np.zeros(0), np.zeros(0), pts
    support, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    a = np.zeros(support.shape[0])
    b = np.zeros(support.shape[0])
    np.add.at(a, inverse[: mu.size], mu.weights)
    np.add.at(b, inverse[mu.size:], nu.weights)
    return a, b, support


def tv_distance(mu, nu):
    """Total variation ``(1/2) sum_x |mu(x) - nu(x)|`` between equal-mass measures."""
    if abs(mu.mass - nu.mass) > MASS_TOL:
        raise MassMismatch(f"masses differ: {mu.mass!r} vs {nu.mass!r}")
    a, b, _ = _aligned_weights(mu, nu)
    return 0.5 * float(np.abs(a - b).sum())


def meet(mu, nu):
    """Pointwise minimum ``mu ^ nu`` of two measures."""
    a, b, support = _aligned_weights(mu, nu)
    return DiscreteMeasure(support, np.minimum(a, b), dim=mu.dim)


def sample_family(name, params=None, n=None, seed=0):
    """Draw from one of the clean families used in tests and examples.

    ``gaussian``: params ``sigma`` (default 1), ``d`` (1), ``mean`` (0).
    ``bounded-qth-moment``: params ``sigma``, ``q``, ``d``; radial Pareto law
    scaled so that ``E|X - mean|^q = sigma^q``.
    ``two-point-fixture``: params ``x``, ``eps`` and either ``y`` or
    ``sigma`` and ``q`` (then ``y = x + sigma * eps**(-1/q)`` along the first
    axis). Returns the pair ``(delta_x, (1 - eps) delta_x + eps delta_y)``.
    """
    params = dict(params or {})
    if name == "two-point-fixture":
        x = np.atleast_1d(np.asarray(params.get("x", 0.0), dtype=float))
        eps = check_radius(params["eps"])
        if "y" in params:
            y = np.atleast_1d(np.asarray(params["y"], dtype=float))
        else:
            sigma, q = float(params["sigma"]), float(params["q"])
            if sigma <= 0 or q <= 0:
                raise ValueError("sigma and q must be positive")
            y = x.copy()
            y[0] += sigma * eps ** (-1.0 / q)
        mu = DiscreteMeasure.dirac(x)
        nu = DiscreteMeasure(np.vstack([x, y]), [1.0 - eps, eps])
        return mu, nu

    if name not in ("gaussian", "bounded-qth-moment"):
        raise UnknownFamily(f"unknown family {name!r}")
    if n is None or n < 1:
        raise EmptyInput("need n >= 1 samples")
    sigma = float(params.get("sigma", 1.0))
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d = int(params.get("d", 1))
    mean = np.broadcast_to(np.asarray(params.get("mean", 0.0), dtype=float), (d,))
    rng = check_random_state(seed)
    if name == "gaussian":
        return empirical(mean + sigma * rng.standard_normal((n, d)))

    q = float(params["q"])
    p = float(params.get("p", 1.0))
    if q <= p:
        raise ValueError("bounded-qth-moment family needs q > p")
    shape = q + 1.0
    radius = (rng.pareto(shape, size=n) + 1.0) * ((shape - q) / shape) ** (1.0 / q)
    direction = rng.standard_normal((n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return empirical(mean + sigma * radius[:, None] * direction)
