"""Fixture suites with known answers, run by ``robust-ot bench``."""
import zlib

import numpy as np

from .dual import dual_ascent, dual_objective
from .estimation import detect_elbow, sweep_radius
from .exact import RobustProblem, robust_distance, solve_robust
from .fixtures import (breakdown_pair, elbow_instance, far_outlier_huber, random_measure,
                       random_pair)
from .io import format_number
from .sliced import _parallel_map


def _triangle(rng, threads):
    draws = []
    for _ in range(100):
        mu, nu = random_pair(rng, 12, 12, 3)
        kappa = random_measure(rng, int(rng.integers(1, 13)), mu.dim)
        e1, e2 = rng.uniform(0, 0.45, 2)
        p = float(rng.choice([1.0, 1.5, 2.0]))
        draws.append((mu, kappa, nu, e1, e2, p))

    def violation(d):
        mu, kappa, nu, e1, e2, p = d
        lhs = robust_distance(mu, nu, e1 + e2, p)
        return lhs - robust_distance(mu, kappa, e1, p) - robust_distance(kappa, nu, e2, p)

    worst = max(_parallel_map(violation, draws, threads))
    return len(draws), worst, 1e-8, worst <= 1e-8


def _duality(rng, threads):
    problems = []
    for _ in range(20):
        mu, nu = random_pair(rng, 15, 15, 3)
        eps = float(rng.choice([0.0, 0.1, 0.25]))
        problems.append(RobustProblem.symmetric(mu, nu, eps, float(rng.choice([1.0, 2.0]))))

    def ratio(problem):
        sol = solve_robust(problem)
        tol = max(1e-3 * (1 + sol.value_p), 1e-6)
        ascent = abs(sol.value_p - dual_ascent(problem).objective) / tol
        lp = abs(sol.value_p - dual_objective(sol.potentials, problem)) / 1e-7
        return max(ascent, lp)

    worst = max(_parallel_map(ratio, problems, threads))
    return len(problems), worst, 1.0, worst <= 1.0


def _elbow(rng, threads):
    mu_t, nu_t, info = elbow_instance(0.2)
    taus = np.round(np.arange(0.0, 0.4 + 1e-9, 0.02), 12)
    eps_hat, _ = detect_elbow(sweep_radius(mu_t, nu_t, 1.0, taus, threads=threads))
    err = abs(eps_hat - 0.2)
    return 1, err, 0.02, err <= 0.02 + 1e-12


def _recovery(rng, threads):
    cases = [(int(s), float(p)) for s in rng.integers(0, 2**31, 10) for p in (1.0, 2.0)]

    def err(case):
        seed, p = case
        mu_t, nu_t, mu, nu = far_outlier_huber(seed, 0.2)
        target = 0.8 ** (1 / p) * robust_distance(mu, nu, 0.0, p)
        return abs(robust_distance(mu_t, nu_t, 0.2, p) - target)

    worst = max(_parallel_map(err, cases, threads))
    return len(cases), worst, 1e-8, worst <= 1e-8


def _breakdown(rng, threads):
    cases = []
    for _ in range(10):
        mu, nu = random_pair(rng, 10, 10, 2)
        cases.append((mu, nu, float(rng.uniform(0.02, 0.33)), float(rng.choice([1.0, 2.0]))))

    def err(case):
        mu, nu, eps, p = case
        mu_t, nu_t = breakdown_pair(mu, nu, eps, p)
        return abs(robust_distance(mu_t, nu_t, eps, p) - robust_distance(mu, nu, 3 * eps, p))

    worst = max(_parallel_map(err, cases, threads))
    return len(cases), worst, 1e-8, worst <= 1e-8


SUITES = {
    "triangle": _triangle,
    "duality-gap": _duality,
    "elbow": _elbow,
    "exact-recovery": _recovery,
    "breakdown": _breakdown,
}


def run_suites(names, seed=0, threads=1):
    """Run the named suites; returns the pass/fail table and whether all passed."""
    lines = ["suite\tinstances\tworst\ttolerance\tstatus"]
    ok = True
    for name in names:
        rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
        count, worst, tol, passed = SUITES[name](rng, threads)
        ok &= bool(passed)
        lines.append(f"{name}\t{count}\t{format_number(worst)}\t{format_number(tol)}\t"
                     f"{'PASS' if passed else 'FAIL'}")
    return "\n".join(lines) + "\n", ok
