import numpy as np
import pytest
from sklearn.base import clone

from robust_ot import DiscreteMeasure, EmptyFamily
from robust_ot.estimation import CandidateFamily
from robust_ot.estimators import MinimumDistanceEstimator, RadiusElbowSelector
from robust_ot.fixtures import elbow_instance


def test_mde_estimator():
    family = CandidateFamily.location(DiscreteMeasure.dirac([0.0]), np.arange(6.0))
    X = np.array([[2.0]] * 8 + [[50.0]] * 2)
    est = MinimumDistanceEstimator(family=family, eps=0.2).fit(X)
    assert est.label_ == 2.0 and est.value_ == 0.0 and est.index_ == 2
    assert est.score(X) == 0.0
    assert est.scores_.shape == (6,)
    assert clone(est).get_params()["eps"] == 0.2


def test_mde_estimator_empty_family():
    with pytest.raises(EmptyFamily):
        MinimumDistanceEstimator().fit(np.zeros((3, 1)))


def test_elbow_selector():
    mt, nt, _ = elbow_instance(eps=0.2)
    sel = RadiusElbowSelector(p=1.0).fit(mt, nt)
    assert abs(sel.eps_ - 0.2) <= 0.02 + 1e-12
    assert sel.curve_.taus.size == 25
