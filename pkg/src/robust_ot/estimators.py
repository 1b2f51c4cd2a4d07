"""scikit-learn style wrappers around the estimation procedures.

Only the two procedures that fit a ``fit`` / fitted-attribute workflow are
wrapped; everything else stays a plain function.
"""
import numpy as np
from sklearn.base import BaseEstimator

from .estimation import CandidateFamily, detect_elbow, mde_scores, sweep_radius
from .measures import DiscreteMeasure, empirical


def _as_measure(X):
    return X if isinstance(X, DiscreteMeasure) else empirical(np.asarray(X, dtype=float))


class MinimumDistanceEstimator(BaseEstimator):
    """Pick the family member closest to the data in robust distance.

    ``X`` is a sample array (rows are observations) or a DiscreteMeasure.
    After ``fit``: ``index_``, ``member_``, ``label_``, ``value_``, ``scores_``.
    """

    def __init__(self, family=None, p=1.0, eps=0.0, delta=0.0, one_sided=False, threads=1):
        self.family = family
        self.p = p
        self.eps = eps
        self.delta = delta
        self.one_sided = one_sided
        self.threads = threads

    def fit(self, X, y=None):
        family = self.family
        if not isinstance(family, CandidateFamily):
            family = CandidateFamily(family if family is not None else [])
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        scores = mde_scores(_as_measure(X), family, self.p, self.eps,
                            one_sided=self.one_sided, threads=self.threads)
        k = int(np.flatnonzero(scores <= scores.min() + self.delta)[0])
        self.scores_ = scores
        self.index_ = k
        self.member_ = family[k]
        self.label_ = family.labels[k]
        self.value_ = float(scores[k])
        return self

    def score(self, X, y=None):
        """Negative robust distance between ``X`` and the fitted member."""
        s = mde_scores(_as_measure(X), CandidateFamily([self.member_]), self.p, self.eps,
                       one_sided=self.one_sided)
        return -float(s[0])


class RadiusElbowSelector(BaseEstimator):
    """Estimate the contamination level from the kink of the radius sweep.

    ``fit(X, Y)`` sweeps ``W_p^tau(X, Y)^p`` over ``grid`` and stores
    ``eps_``, ``curve_`` and ``diagnostics_``.
    """

    def __init__(self, p=1.0, grid=None, threshold=None, threads=1):
        self.p = p
        self.grid = grid
        self.threshold = threshold
        self.threads = threads

    def fit(self, X, Y):
        grid = self.grid if self.grid is not None else np.round(np.arange(0, 0.5, 0.02), 12)
        self.curve_ = sweep_radius(_as_measure(X), _as_measure(Y), self.p, grid,
                                   threads=self.threads)
        self.eps_, self.diagnostics_ = detect_elbow(self.curve_, self.threshold)
        return self
