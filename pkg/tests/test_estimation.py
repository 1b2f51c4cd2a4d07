import numpy as np
import pytest

from robust_ot import (BeyondBreakdown, ContaminationSpec, DiscreteMeasure, EmptyFamily,
                       InvalidMomentOrder, NoElbow, ResilienceProfile, TooLarge, contaminate,
                       detect_elbow, empirical, mde, resilience_bound,
                       robust_distance, robust_distance_certificate, sample_family,
                       sweep_radius, tv_distance, two_sample_test, independence_test)
from robust_ot.estimation import CandidateFamily, independence_measures
from robust_ot.fixtures import elbow_instance, far_outlier_huber


def test_mde_dirac_family():
    mt = DiscreteMeasure([[2.0], [50.0]], [0.8, 0.2])
    family = CandidateFamily.finite_list([DiscreteMeasure.dirac([float(t)]) for t in range(6)])
    member, value = mde(mt, family, p=1.0, eps=0.2)
    assert member == DiscreteMeasure.dirac([2.0]) and value < 1e-12
    # one-sided: only the contaminated side is trimmed
    member, value = mde(mt, family, p=1.0, eps=0.2, one_sided=True)
    assert member == DiscreteMeasure.dirac([2.0]) and value < 1e-12


def test_mde_member_of_family():
    rng = np.random.default_rng(0)
    members = [DiscreteMeasure(rng.standard_normal((4, 2))) for _ in range(5)]
    member, value = mde(members[3], CandidateFamily(members), p=2.0, eps=0.0)
    assert member is members[3] and value == 0.0


def test_mde_delta_picks_lowest_index():
    family = CandidateFamily([DiscreteMeasure.dirac([t]) for t in (3.0, 1.1, 1.0)])
    target = DiscreteMeasure.dirac([1.0])
    assert mde(target, family, delta=0.0)[0] is family[2]
    assert mde(target, family, delta=0.2)[0] is family[1]
    with pytest.raises(EmptyFamily):
        CandidateFamily([])


def test_mde_gaussian_location():
    rng = np.random.default_rng(0)
    clean = empirical(rng.standard_normal(500) + 0.7)
    mt = contaminate(clean, ContaminationSpec("huber", 0.1, DiscreteMeasure.dirac([50.0])))
    template = empirical(np.random.default_rng(1).standard_normal(200))
    family = CandidateFamily.location(template, np.round(np.arange(-2, 2.01, 0.1), 10))
    member, _ = mde(mt, family, p=1.0, eps=0.1)
    theta = family.labels[family.members().index(member)]
    # recorded with this seed: 0.8
    assert abs(theta - 0.7) <= 0.3


def test_certificate_basics():
    mu = DiscreteMeasure(np.arange(5.0)[:, None])
    prof = ResilienceProfile(sigma=1.0, q=4.0, p=1.0)
    cert = robust_distance_certificate(mu, mu, 1.0, 0.0, prof)
    assert cert == (0.0, 0.0, 0.0)
    cert = robust_distance_certificate(mu, mu, 1.0, 0.1, prof)
    assert abs(cert.multiplicative_bound - 0.3) < 1e-15
    with pytest.raises(BeyondBreakdown):
        robust_distance_certificate(mu, mu, 1.0, 1 / 3, prof)
    d = cert.to_dict()
    assert set(d) == {"statistic", "threshold", "decision", "bounds", "warnings"}
    assert set(d["bounds"]) >= {"additive", "multiplicative"}


def test_certificate_on_huber_fixture():
    prof = ResilienceProfile(sigma=1.0, q=4.0, p=1.0)
    for seed in range(5):
        mt, nt, mu, nu = far_outlier_huber(seed, eps=0.2)
        clean = robust_distance(mu, nu, 0.0, 1.0)
        cert = robust_distance_certificate(mt, nt, 1.0, 0.2, prof)
        assert abs(cert.estimate - clean) <= (cert.additive_bound
                                              + cert.multiplicative_bound * clean + 1e-9)
        assert cert.estimate <= clean + 1e-9


def test_resilience_profile():
    assert resilience_bound(1.0, 4.0, 1.0, 0.0) == 0.0
    grid = np.linspace(0, 0.99, 50)
    vals = [resilience_bound(2.0, 4.0, 2.0, e) for e in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    with pytest.raises(InvalidMomentOrder):
        ResilienceProfile(1.0, 2.0, 2.0)


def test_resilience_greedy_deletion():
    # delete the eps mass farthest from the mean, renormalize, and compare
    for p in (1.0, 2.0):
        mu = sample_family("bounded-qth-moment", {"sigma": 1.0, "q": 4.0, "d": 1}, 400, seed=3)
        prof = ResilienceProfile(sigma=1.0, q=4.0, p=p)
        order = np.argsort(-np.abs(mu.points[:, 0] - mu.mean()[0]))
        for eps in (0.05, 0.1, 0.25):
            w = mu.weights.copy()
            left = eps
            for i in order:
                take = min(w[i], left)
                w[i] -= take
                left -= take
                if left <= 1e-15:
                    break
            kept = DiscreteMeasure(mu.points, w / w.sum())
            assert robust_distance(mu, kept, 0.0, p) <= prof.rho(eps)


def test_sweep_basics():
    mt = DiscreteMeasure([[0.0], [1.0], [2.0]], [0.5, 0.3, 0.2])
    nt = DiscreteMeasure([[0.0], [1.0], [7.0]], [0.4, 0.3, 0.3])
    tv = tv_distance(mt, nt)
    curve = sweep_radius(mt, nt, 2.0, [0.0, 0.1, tv, 0.5, 0.8])
    assert abs(curve.values_p[0] - robust_distance(mt, nt, 0.0, 2.0) ** 2) < 1e-12
    assert np.all(curve.values_p[2:] == 0.0)
    assert np.all(curve.slopes <= 1e-9)
    with pytest.raises(Exception):
        sweep_radius(mt, nt, 2.0, [0.2, 0.1])


def test_sweep_ratio_bound():
    mt, nt, _, _ = far_outlier_huber(1, eps=0.1)
    taus = np.linspace(0, 0.6, 13)
    curve = sweep_radius(mt, nt, 2.0, taus)
    v = curve.values
    for k in range(len(taus) - 1):
        ratio = ((1 - taus[k + 1]) / (1 - taus[k])) ** 0.5
        assert v[k + 1] <= ratio * v[k] + 1e-9


def test_elbow_triangle():
    mt, nt, info = elbow_instance(eps=0.2)
    taus = np.round(np.arange(0, 0.5, 0.02), 10)
    curve = sweep_radius(mt, nt, 1.0, taus)
    eps_hat, diag = detect_elbow(curve)
    assert abs(eps_hat - 0.2) <= 0.02 + 1e-12
    eps_thr, diag_thr = detect_elbow(curve, threshold=-info["diam"])
    assert abs(eps_thr - 0.2) <= 0.02 + 1e-12
    assert abs(diag_thr.curvature_eps - diag_thr.threshold_eps) <= 0.02 + 1e-12


def test_elbow_line_geometry_slopes():
    # collinear outliers: the left slope is steeper than the inlier scale but
    # not as steep as the largest outlier distance
    mt, nt, info = elbow_instance(eps=0.2, scale=10.0, geometry="line")
    taus = np.round(np.arange(0, 0.4, 0.02), 10)
    curve = sweep_radius(mt, nt, 1.0, taus)
    left = curve.slopes[: 9]
    M_min = min(info["d_alpha_S"], info["d_beta_S"])
    assert np.all(left <= -M_min + 1e-9)
    assert abs(detect_elbow(curve)[0] - 0.2) <= 0.02 + 1e-12


def test_no_elbow_for_identical():
    mu = DiscreteMeasure(np.arange(4.0)[:, None])
    curve = sweep_radius(mu, mu, 1.0, [0.0, 0.1, 0.2, 0.3])
    with pytest.raises(NoElbow):
        detect_elbow(curve)


def test_two_sample():
    rng = np.random.default_rng(0)
    a = empirical(rng.standard_normal(50))
    dec = two_sample_test(a, a, 1.0, 0.1, 0.01)
    assert dec.decision == "accept" and dec.statistic == 0.0
    assert "guarantee_void" in two_sample_test(a, a, 1.0, 0.3, 0.01).warnings
    # separation 90 rho with huber outliers on both sides
    rho = 0.01
    x = rng.standard_normal(200)
    y = rng.standard_normal(200) + 90 * rho
    out = ContaminationSpec("huber", 0.1, DiscreteMeasure.dirac([40.0]))
    out2 = ContaminationSpec("huber", 0.1, DiscreteMeasure.dirac([-40.0]))
    dec = two_sample_test(contaminate(empirical(x), out), contaminate(empirical(y), out2),
                          1.0, 0.1, rho)
    assert dec.reject
    assert dec.to_dict()["threshold"] == 3 * rho


def test_independence():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((12, 1))
    dep = independence_test((x, x.copy()), 1.0, 0.0, 0.01)
    assert dep.reject
    xi, yi = rng.standard_normal((60, 1)), rng.standard_normal((60, 1))
    ind = independence_test((xi, yi), 1.0, 0.1, 0.1)
    assert ind.statistic < dep.statistic
    assert not ind.reject


def test_independence_cap():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((30, 1))
    with pytest.raises(TooLarge):
        independence_measures((x, x), max_atoms=100, subsample=False)
    joint, product, split = independence_measures((x, x), max_atoms=100, seed=1)
    assert product.size <= 100 and split == 1
