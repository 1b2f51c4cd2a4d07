"""Exact robust Wasserstein distances by min-cost flow on an augmented space.

Trimming ``eps`` mass from each marginal is equivalent to a balanced transport
problem in which each side gains a dummy atom of mass ``eps`` that absorbs the
other side's trimmed mass at zero cost. Dummy-to-dummy transport is priced at
``1 + max cost`` so it is never used.
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dual as _dual
from ._netsimplex import MASS_SCALE, network_simplex, to_integer_masses
from ._validation import check_radius
from .exceptions import InvalidDimensions, MassMismatch, NumericalFailure
from .measures import MASS_TOL, DiscreteMeasure, GroundCost, meet

MAX_PIVOTS = 50_000_000


@dataclass(frozen=True)
class RobustProblem:
    """Robust transport instance between two probability measures.

    ``eps_mu`` is trimmed from ``mu`` and ``eps_nu`` from ``nu``; equal radii
    give the symmetric robust distance.
    """

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    cost: GroundCost = field(default_factory=GroundCost)
    eps_mu: float = 0.0
    eps_nu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eps_mu", check_radius(self.eps_mu, "eps_mu"))
        object.__setattr__(self, "eps_nu", check_radius(self.eps_nu, "eps_nu"))
        if self.mu.dim != self.nu.dim:
            raise InvalidDimensions("mu and nu live in different dimensions")
        for name, m in (("mu", self.mu), ("nu", self.nu)):
            if not m.is_probability:
                raise MassMismatch(f"{name} must be a probability measure (mass {m.mass!r})")

    @classmethod
    def symmetric(cls, mu, nu, eps, p=1.0, cost=None):
        cost = cost if cost is not None else GroundCost(p)
        return cls(mu, nu, cost, eps, eps)

    @property
    def eps(self):
        if self.eps_mu != self.eps_nu:
            raise ValueError("asymmetric problem has no single radius")
        return self.eps_mu

    @property
    def p(self):
        return self.cost.p

    def cost_matrix(self):
        return self.cost.matrix(self.mu.points, self.nu.points)


@dataclass(frozen=True)
class TransportSolution:
    """Optimal (or approximate) robust transport between ``mu`` and ``nu``.

    ``plan_matrix[i, j]`` is the mass moved from ``mu.points[i]`` to
    ``nu.points[j]``; ``removed_mu`` and ``removed_nu`` are the trimmed parts
    in the units of the original measures.
    """

    value: float
    value_p: float
    plan_matrix: np.ndarray
    removed_mu: DiscreteMeasure
    removed_nu: DiscreteMeasure
    p: float
    potentials: Optional["_dual.DualPotential"] = None
    approximate: bool = False
    info: dict = field(default_factory=dict)

    @property
    def plan(self):
        """Sparse plan as a list of ``(i, j, mass)`` triples."""
        rows, cols = np.nonzero(self.plan_matrix)
        return [(int(i), int(j), float(self.plan_matrix[i, j])) for i, j in zip(rows, cols)]

    @property
    def mu_kept(self):
        return self.plan_matrix.sum(axis=1)

    @property
    def nu_kept(self):
        return self.plan_matrix.sum(axis=0)


def _solve_flow(a, b, C):
    """Exact balanced transport between float marginals ``a`` and ``b``.

    Masses are scaled to integers with denominator ``MASS_SCALE``; entries that
    round to zero are dropped from the network. Returns the float plan and
    dual vectors ``(u, v)`` with ``u_i + v_j <= C_ij``.
    """
    a_int = to_integer_masses(a, int(round(float(np.sum(a)) * MASS_SCALE)))
    b_int = to_integer_masses(b, int(a_int.sum()))
    return _solve_integer_flow(a_int, b_int, C)


def _solve_integer_flow(a_int, b_int, C):
    rows = np.flatnonzero(a_int > 0)
    cols = np.flatnonzero(b_int > 0)
    Csub = np.ascontiguousarray(C[np.ix_(rows, cols)], dtype=float)
    F, u_sub, v_sub, status, iters = network_simplex(
        a_int[rows], b_int[cols], Csub, MAX_PIVOTS)
    if status != 0:
        raise NumericalFailure(f"network simplex failed (status {status})")
    plan = np.zeros(C.shape)
    plan[np.ix_(rows, cols)] = F / MASS_SCALE
    u = np.empty(C.shape[0])
    v = np.empty(C.shape[1])
    u[rows] = u_sub
    v[cols] = v_sub
    # dropped nodes get the tightest feasible potential
    missing_cols = np.setdiff1d(np.arange(C.shape[1]), cols)
    if missing_cols.size:
        v[missing_cols] = (C[np.ix_(rows, missing_cols)] - u_sub[:, None]).min(axis=0)
    missing_rows = np.setdiff1d(np.arange(C.shape[0]), rows)
    if missing_rows.size:
        u[missing_rows] = (C[missing_rows, :] - v[None, :]).min(axis=1)
    return plan, u, v, iters


def _root(value_p, p):
    value_p = max(float(value_p), 0.0)
    return value_p ** (1.0 / p)


def _check_equal_mass(mu, nu):
    if abs(mu.mass - nu.mass) > MASS_TOL:
        raise MassMismatch(f"masses differ: {mu.mass!r} vs {nu.mass!r}")
    if mu.dim != nu.dim:
        raise InvalidDimensions("mu and nu live in different dimensions")


def solve_standard(mu, nu, cost=None, potentials=True):
    """Classic optimal transport ``W_p(mu, nu)`` between equal-mass measures."""
    cost = cost if cost is not None else GroundCost()
    _check_equal_mass(mu, nu)
    C = cost.matrix(mu.points, nu.points)
    plan, u, v, iters = _solve_flow(mu.weights, nu.weights * (mu.mass / nu.mass), C)
    value_p = float(np.sum(plan * C))
    pot = None
    if potentials:
        pot = _dual.potentials_from_flow(mu, nu, cost, 0.0, v, None)
    return TransportSolution(
        value=_root(value_p, cost.p),
        value_p=value_p,
        plan_matrix=plan,
        removed_mu=DiscreteMeasure.zero(mu.dim),
        removed_nu=DiscreteMeasure.zero(nu.dim),
        p=cost.p,
        potentials=pot,
        info={"pivots": int(iters)},
    )


def dummy_cost(C):
    """Dummy-to-dummy price used by every engine: one plus the largest real cost."""
    return 1.0 + (float(C.max()) if C.size else 0.0)


def augmented_cost(C):
    n, m = C.shape
    Cbar = np.zeros((n + 1, m + 1))
    Cbar[:n, :m] = C
    Cbar[n, m] = dummy_cost(C)
    return Cbar


def _snap_to_tv(a_int, b_int, eps_int):
    # a radius within integer rounding noise below TV is treated as TV itself
    tv_int = int(np.maximum(a_int - b_int, 0).sum())
    if eps_int < tv_int <= eps_int + a_int.size + b_int.size + 2:
        return tv_int
    return eps_int


def _aligned_integer_masses(mu, nu):
    # identical float weights on shared atoms must round to identical integers
    total = MASS_SCALE
    a_int = to_integer_masses(mu.weights / mu.mass, total)
    b_int = to_integer_masses(nu.weights / nu.mass, total)
    return a_int, b_int


def solve_robust(problem, potentials=True):
    """Symmetric robust distance ``W_p^eps(mu, nu)``.

    Solved exactly as balanced transport between ``mu + eps * dummy`` and
    ``nu + eps * dummy`` under the augmented cost.
    """
    eps = problem.eps
    mu, nu, cost = problem.mu, problem.nu, problem.cost
    if eps == 0.0:
        return solve_standard(mu, nu, cost, potentials=potentials)
    n, m = mu.size, nu.size
    C = problem.cost_matrix()
    Cbar = augmented_cost(C)
    a_int, b_int = _aligned_integer_masses(mu, nu)
    eps_int = int(round(eps * MASS_SCALE))
    eps_int = _snap_to_tv(*_shared_support_masses(mu, nu, a_int, b_int), eps_int)
    plan_bar, u, v, iters = _solve_integer_flow(
        np.append(a_int, eps_int), np.append(b_int, eps_int), Cbar)
    if plan_bar[n, m] > 0:
        raise NumericalFailure("flow used the dummy-to-dummy edge")
    plan = plan_bar[:n, :m]
    value_p = float(np.sum(plan * C))
    pot = None
    if potentials:
        pot = _dual.potentials_from_flow(mu, nu, cost, eps, v[:m], v[m])
    return TransportSolution(
        value=_root(value_p, cost.p),
        value_p=value_p,
        plan_matrix=plan,
        removed_mu=DiscreteMeasure(mu.points, plan_bar[:n, m], dim=mu.dim),
        removed_nu=DiscreteMeasure(nu.points, plan_bar[n, :m], dim=nu.dim),
        p=cost.p,
        potentials=pot,
        info={"pivots": int(iters), "dummy_cost": float(Cbar[n, m])},
    )


def _shared_support_masses(mu, nu, a_int, b_int):
    # integer masses of mu and nu aligned on the union support
    pts = np.vstack([mu.points, nu.points])
    _, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    k = int(inverse.max()) + 1
    A = np.zeros(k, dtype=np.int64)
    B = np.zeros(k, dtype=np.int64)
    np.add.at(A, inverse[: mu.size], a_int)
    np.add.at(B, inverse[mu.size:], b_int)
    return A, B


def solve_asymmetric(problem, potentials=True):
    """Asymmetric robust distance with radii ``eps_mu`` and ``eps_nu``.

    Kept parts have masses ``1 - eps_mu`` and ``1 - eps_nu``; they are
    rescaled to the common mass ``(1 - eps_mu)(1 - eps_nu)`` by multiplying
    the first by ``1 - eps_nu`` and the second by ``1 - eps_mu``. With equal
    radii the value is ``(1 - eps)**(1/p)`` times the symmetric distance, and
    with ``eps_nu = 0`` it is the one-sided distance.
    """
    e1, e2 = problem.eps_mu, problem.eps_nu
    mu, nu, cost = problem.mu, problem.nu, problem.cost
    n, m = mu.size, nu.size
    C = problem.cost_matrix()
    total = int(round((1.0 - e1 * e2) * MASS_SCALE))
    row_real = int(round((1.0 - e2) * MASS_SCALE))
    col_real = int(round((1.0 - e1) * MASS_SCALE))
    a_int = to_integer_masses((1.0 - e2) * mu.weights / mu.mass, row_real)
    b_int = to_integer_masses((1.0 - e1) * nu.weights / nu.mass, col_real)
    row_dummy = total - row_real
    col_dummy = total - col_real
    Cbar = augmented_cost(C)
    plan_bar, u, v, iters = _solve_integer_flow(
        np.append(a_int, row_dummy), np.append(b_int, col_dummy), Cbar)
    if plan_bar[n, m] > 0:
        raise NumericalFailure("flow used the dummy-to-dummy edge")
    plan = plan_bar[:n, :m]
    value_p = float(np.sum(plan * C))
    removed_mu = plan_bar[:n, m] / (1.0 - e2)
    removed_nu = plan_bar[n, :m] / (1.0 - e1)
    pot = None
    if potentials and e2 == 0.0:
        pot = _dual.potentials_from_flow(mu, nu, cost, e1, v[:m], v[m] if e1 > 0 else None,
                                         one_sided=True)
    return TransportSolution(
        value=_root(value_p, cost.p),
        value_p=value_p,
        plan_matrix=plan,
        removed_mu=DiscreteMeasure(mu.points, removed_mu, dim=mu.dim),
        removed_nu=DiscreteMeasure(nu.points, removed_nu, dim=nu.dim),
        p=cost.p,
        potentials=pot,
        info={"pivots": int(iters), "scale_mu": 1.0 - e2, "scale_nu": 1.0 - e1},
    )


def one_sided(mu_tilde, nu, cost=None, eps=0.0, potentials=True):
    """One-sided robust distance: trim ``eps`` from ``mu_tilde`` only and compare
    the rest with ``(1 - eps) * nu``."""
    cost = cost if cost is not None else GroundCost()
    eps = check_radius(eps)
    if eps == 0.0:
        sol = solve_standard(mu_tilde, nu, cost, potentials=potentials)
        if sol.potentials is not None:
            # restricting phi to supp(mu_tilde) keeps it optimal for the one-sided dual
            phi = sol.potentials.phi_on_mu()
            C = cost.matrix(mu_tilde.points, nu.points)
            phi_c = (C - phi[:, None]).min(axis=0)
            obj = float(mu_tilde.weights @ phi + nu.weights @ phi_c)
            pot = _dual.DualPotential(mu_tilde.points, phi, phi_c, 0.0, obj,
                                      np.arange(mu_tilde.size), None, True)
            sol = dataclasses.replace(sol, potentials=pot)
        return sol
    return solve_asymmetric(RobustProblem(mu_tilde, nu, cost, eps, 0.0), potentials=potentials)


def robust_distance(mu, nu, eps, p=1.0, cost=None):
    """Shortcut returning the number ``W_p^eps(mu, nu)``."""
    return solve_robust(RobustProblem.symmetric(mu, nu, eps, p, cost), potentials=False).value


def mass_addition_lp(problem):
    """Optimal cost of the mass-addition formulation, by a generic LP solver.

    Adds ``eps`` mass to each marginal (anywhere on the union support) and
    transports the enlarged measures. Independent of the flow engine.
    """
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix, vstack as sp_vstack

    eps = problem.eps
    mu, nu = problem.mu, problem.nu
    support = np.unique(np.vstack([mu.points, nu.points]), axis=0)
    k = support.shape[0]
    idx = {row.tobytes(): i for i, row in enumerate(support)}
    a = np.zeros(k)
    b = np.zeros(k)
    for x, w in zip(mu.points, mu.weights):
        a[idx[x.tobytes()]] += w
    for y, w in zip(nu.points, nu.weights):
        b[idx[y.tobytes()]] += w
    C = problem.cost.matrix(support, support)
    # variables: plan (k*k), added-to-mu (k), added-to-nu (k)
    nvar = k * k + 2 * k
    ii = np.repeat(np.arange(k), k)
    jj = np.tile(np.arange(k), k)
    plan_ids = np.arange(k * k)
    row_block = coo_matrix((np.ones(k * k), (ii, plan_ids)), shape=(k, nvar))
    add_mu = coo_matrix((-np.ones(k), (np.arange(k), k * k + np.arange(k))), shape=(k, nvar))
    col_block = coo_matrix((np.ones(k * k), (jj, plan_ids)), shape=(k, nvar))
    add_nu = coo_matrix((-np.ones(k), (np.arange(k), k * k + k + np.arange(k))), shape=(k, nvar))
    sum_mu = coo_matrix((np.ones(k), (np.zeros(k, int), k * k + np.arange(k))), shape=(1, nvar))
    sum_nu = coo_matrix((np.ones(k), (np.zeros(k, int), k * k + k + np.arange(k))), shape=(1, nvar))
    A_eq = sp_vstack([row_block + add_mu, col_block + add_nu, sum_mu, sum_nu]).tocsr()
    b_eq = np.concatenate([a, b, [eps, eps]])
    c = np.concatenate([C.ravel(), np.zeros(2 * k)])
    res = linprog(c, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalFailure(f"mass-addition LP failed: {res.message}")
    return float(res.fun)


def verify_mass_addition(problem):
    """Return ``(removal_cost, addition_cost)``, the optimal ``p``-th power costs of
    the trimming and the mass-addition formulations; they agree at optimum."""
    removal = solve_robust(problem, potentials=False).value_p
    addition = mass_addition_lp(problem)
    return removal, addition


def solve_with_forced_meet(problem):
    """Robust cost when the kept parts must contain the shared mass ``mu ^ nu``.

    Each atom is split into its share of ``mu ^ nu`` and the remainder, and
    only remainders may be trimmed. The optimum equals the unrestricted one
    because some minimizer keeps all of the common mass. For ``p = 1`` the
    common part can moreover be left in place at zero cost.
    """
    mu, nu, cost, eps = problem.mu, problem.nu, problem.cost, problem.eps
    common = meet(mu, nu)
    if common.size == 0:
        return solve_robust(problem, potentials=False).value_p
    rest_mu = _subtract(mu, common)
    rest_nu = _subtract(nu, common)
    if eps >= rest_mu.mass - MASS_TOL:
        return 0.0
    xs = np.vstack([common.points, rest_mu.points])
    ys = np.vstack([common.points, rest_nu.points])
    C = cost.matrix(xs, ys)
    Cbar = augmented_cost(C)
    k = common.size
    # common atoms may not be trimmed
    forbid = 10.0 * Cbar[-1, -1] + 1.0
    Cbar[:k, -1] = forbid
    Cbar[-1, :k] = forbid
    a = np.concatenate([common.weights, rest_mu.weights, [eps]])
    b = np.concatenate([common.weights, rest_nu.weights, [eps]])
    plan_bar, _, _, _ = _solve_flow(a, b * (a.sum() / b.sum()), Cbar)
    if plan_bar[:k, -1].sum() > MASS_TOL or plan_bar[-1, :k].sum() > MASS_TOL:
        raise NumericalFailure("flow trimmed shared mass")
    return float(np.sum(plan_bar[:-1, :-1] * C))


def _subtract(mu, part):
    pts = np.vstack([mu.points, part.points])
    support, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    w = np.zeros(support.shape[0])
    np.add.at(w, inverse[: mu.size], mu.weights)
    np.add.at(w, inverse[mu.size:], -part.weights)
    w[w < 1e-15] = 0.0
    return DiscreteMeasure(support, w, dim=mu.dim)
