import numpy as np
import pytest

from conftest import rand_measure
from robust_ot import (DiscreteMeasure, InvalidDimensions, ProjectionFrame, project,
                       robust_distance, sample_frame, sliced_distance,
                       sliced_triangle_check)
from robust_ot.sliced import sample_frames


def test_frame_orthonormal_and_deterministic():
    U = sample_frame(5, 5, seed=3).U
    assert np.abs(U.T @ U - np.eye(5)).max() <= 1e-10
    assert np.array_equal(U, sample_frame(5, 5, seed=3).U)
    with pytest.raises(InvalidDimensions):
        sample_frame(2, 3)
    with pytest.raises(ValueError):
        ProjectionFrame(np.ones((3, 2)))


def test_haar_second_moment():
    frames = sample_frames(3, 1, 100_000, seed=0)
    u = np.array([f.U[0, 0] for f in frames]) ** 2
    se = u.std(ddof=1) / np.sqrt(u.size)
    assert abs(u.mean() - 1 / 3) <= 3 * se


def test_project():
    mu = DiscreteMeasure([[1.0, 2.0], [3.0, -1.0]], [0.25, 0.75])
    assert project(mu, np.eye(2)) == mu
    U = sample_frame(2, 1, seed=1).U
    assert project(DiscreteMeasure.dirac([1.0, 2.0]), U) == DiscreteMeasure.dirac(U.T @ [1.0, 2.0])
    assert project(mu, U).mass == mu.mass
    with pytest.raises(InvalidDimensions):
        project(mu, np.eye(3)[:, :1])


def test_full_dimension_reduces_to_ambient():
    rng = np.random.default_rng(0)
    mu, nu = rand_measure(rng, 6, 3), rand_measure(rng, 5, 3)
    for eps in (0.0, 0.2):
        ref = robust_distance(mu, nu, eps, 2.0)
        avg = sliced_distance(mu, nu, p=2.0, k=3, eps=eps, num_projections=10)
        assert abs(avg.value - ref) < 1e-8
        mx = sliced_distance(mu, nu, p=2.0, k=3, eps=eps, mode="max", restarts=2, steps=5)
        assert abs(mx.value - ref) < 1e-3


def test_max_dominates_average():
    rng = np.random.default_rng(1)
    for _ in range(3):
        mu, nu = rand_measure(rng, 6, 3), rand_measure(rng, 6, 3)
        avg = sliced_distance(mu, nu, p=1.0, k=1, num_projections=30, seed=2)
        mx = sliced_distance(mu, nu, p=1.0, k=1, mode="max", restarts=5, steps=30, seed=2)
        assert mx.value >= avg.value - 1e-12
        assert mx.frames[0].k == 1


def test_max_finds_known_direction():
    # two diracs: the best line is the one through both points
    mu = DiscreteMeasure.dirac([0.0, 0.0, 0.0])
    nu = DiscreteMeasure.dirac([3.0, 4.0, 0.0])
    mx = sliced_distance(mu, nu, p=1.0, k=1, mode="max", restarts=3, steps=100)
    assert abs(mx.value - 5.0) < 1e-3


def test_max_at_least_supplied_frame():
    rng = np.random.default_rng(2)
    mu, nu = rand_measure(rng, 5, 3), rand_measure(rng, 5, 3)
    f = sample_frame(3, 2, seed=9)
    at_f = sliced_distance(mu, nu, p=2.0, k=2, frames=[f]).value
    mx = sliced_distance(mu, nu, p=2.0, k=2, mode="max", restarts=0, steps=10, frames=[f])
    assert mx.value >= at_f - 1e-12


def test_one_dimensional_quantile_crosscheck():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((40, 2)), rng.standard_normal((40, 2)) + 1.0
    mu, nu = DiscreteMeasure(x), DiscreteMeasure(y)
    frames = sample_frames(2, 1, 5, seed=4)
    est = sliced_distance(mu, nu, p=1.0, k=1, frames=frames)
    for f, v in zip(frames, est.per_frame):
        # equal-size uniform samples: match sorted projections
        px, py = np.sort((x @ f.U)[:, 0]), np.sort((y @ f.U)[:, 0])
        assert abs(v - np.abs(px - py).mean()) < 1e-12


def test_rotation_invariance():
    rng = np.random.default_rng(5)
    mu, nu = rand_measure(rng, 5, 3), rand_measure(rng, 6, 3)
    f = sample_frame(3, 2, seed=1)
    Q = sample_frame(3, 3, seed=2).U
    a = sliced_distance(mu, nu, p=2.0, k=2, eps=0.1, frames=[f]).value
    rot = lambda m: DiscreteMeasure(m.points @ Q.T, m.weights)
    b = sliced_distance(rot(mu), rot(nu), p=2.0, k=2, eps=0.1, frames=[Q @ f.U]).value
    assert abs(a - b) < 1e-10


def test_point_mass_ratio():
    # the only coupling with a point mass is the product, so the ratio is E|U_1|,
    # which is 1/2 on the sphere in three dimensions
    rng = np.random.default_rng(6)
    mu = rand_measure(rng, 10, 3)
    x0 = DiscreteMeasure.dirac([0.5, -0.2, 0.1])
    est = sliced_distance(mu, x0, p=1.0, k=1, num_projections=4000, seed=1)
    ref = robust_distance(mu, x0, 0.0, 1.0)
    assert abs(est.value_p / ref - 0.5) <= 3 * est.std_error_p / ref


def test_reproducible_and_thread_stable():
    rng = np.random.default_rng(7)
    mu, nu = rand_measure(rng, 8, 3), rand_measure(rng, 8, 3)
    a = sliced_distance(mu, nu, eps=0.1, num_projections=40, seed=3, threads=1)
    b = sliced_distance(mu, nu, eps=0.1, num_projections=40, seed=3, threads=4)
    assert a.value == b.value and a.std_error == b.std_error
    c = sliced_distance(mu, nu, eps=0.1, num_projections=80, seed=3)
    pooled = np.hypot(a.std_error, c.std_error)
    assert abs(a.value - c.value) <= 4 * pooled


def test_triangle_check():
    rng = np.random.default_rng(8)
    for e1, e2 in [(0.0, 0.0), (0.1, 0.15)]:
        mu, kappa, nu = (rand_measure(rng, 6, 3) for _ in range(3))
        rep = sliced_triangle_check(mu, kappa, nu, p=2.0, k=2, eps1=e1, eps2=e2,
                                    num_projections=20)
        assert rep["holds"]
        assert rep["per_frame_min_slack"] >= -1e-9
    rep = sliced_triangle_check(mu, mu, nu, p=1.0, k=1, eps1=0.1, eps2=0.2, num_projections=10)
    assert rep["holds"]
