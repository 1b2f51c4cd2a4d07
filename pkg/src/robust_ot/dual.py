"""Penalized Kantorovich dual of the robust Wasserstein distance.

For the symmetric problem a potential ``phi`` lives on the union support
``S = supp(mu) | supp(nu)`` and its c-transform is taken over ``S`` as well:
``phi_c(y) = min_{x in S} c(x, y) - phi(x)``. The dual objective is

    sum phi dmu + sum phi_c dnu - eps * (max_S phi - min_S phi)

Every potential gives a lower bound on the optimal cost and the supremum
equals it. Restricting ``phi`` to ``supp(mu)`` alone would break the lower
bound when the supports differ.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from ._validation import check_radius, check_random_state
from .exceptions import NoPotentials, NumericalFailure, Unsupported
from .measures import GroundCost


@dataclass(frozen=True)
class DualPotential:
    """A potential on ``support`` together with its c-transform.

    ``phi`` is indexed by ``support``; ``mu_index``/``nu_index`` give the
    position of each atom of ``mu``/``nu`` inside ``support``. ``phi_c`` is the
    c-transform evaluated on the atoms of ``nu``. For one-sided potentials the
    support is ``supp(mu)`` and ``nu_index`` is ``None``.
    """

    support: np.ndarray
    phi: np.ndarray
    phi_c: np.ndarray
    eps: float
    objective: float
    mu_index: np.ndarray
    nu_index: Optional[np.ndarray] = None
    one_sided: bool = False

    def centered(self):
        """Return ``phi`` shifted so that its range penalty equals ``2 eps ||phi||_inf``."""
        return self.phi - 0.5 * (self.phi.max() + self.phi.min())

    def phi_on_mu(self):
        return self.phi[self.mu_index]

    def phi_on_nu(self):
        if self.nu_index is None:
            raise ValueError("one-sided potential is not defined on supp(nu)")
        return self.phi[self.nu_index]


def union_support(mu, nu):
    """Union of the two supports (``mu`` atoms first) and index maps into it."""
    lookup = {}
    pts = []
    for x in mu.points:
        lookup.setdefault(x.tobytes(), len(pts))
        if len(pts) < len(lookup):
            pts.append(x)
    mu_index = np.arange(mu.size)
    nu_index = np.empty(nu.size, dtype=np.int64)
    for j, y in enumerate(nu.points):
        key = y.tobytes()
        if key not in lookup:
            lookup[key] = len(pts)
            pts.append(y)
        nu_index[j] = lookup[key]
    return np.array(pts).reshape(len(pts), mu.dim), mu_index, nu_index


def c_transform(phi, source_points, target_points, cost):
    """``phi_c(y) = min_x c(x, y) - phi(x)`` for every target ``y``; exact, O(nm)."""
    phi = np.asarray(phi, dtype=float)
    C = cost.matrix(np.asarray(source_points, float), np.asarray(target_points, float))
    return (C - phi[:, None]).min(axis=0)


def _c_transform_matrix(phi, C):
    return (C - phi[:, None]).min(axis=0)


def _masses_on(support_size, index, weights):
    w = np.zeros(support_size)
    np.add.at(w, index, weights)
    return w


class _SymmetricDual:
    # cached geometry of one problem's union support
    def __init__(self, mu, nu, cost, eps):
        self.eps = eps
        self.support, self.mu_index, self.nu_index = union_support(mu, nu)
        self.K = self.support.shape[0]
        self.C_SS = cost.matrix(self.support, self.support)
        self.a = _masses_on(self.K, self.mu_index, mu.weights)
        self.b = _masses_on(self.K, self.nu_index, nu.weights)

    def transform(self, phi):
        return _c_transform_matrix(phi, self.C_SS)

    def objective(self, phi):
        phi_c = self.transform(phi)
        return float(self.a @ phi + self.b @ phi_c - self.eps * (phi.max() - phi.min()))

    def potential(self, phi):
        phi = np.asarray(phi, dtype=float)
        phi_c = self.transform(phi)
        return DualPotential(
            support=self.support,
            phi=phi,
            phi_c=phi_c[self.nu_index],
            eps=self.eps,
            objective=self.objective(phi),
            mu_index=self.mu_index,
            nu_index=self.nu_index,
        )


def _phi_array(phi, geometry):
    if isinstance(phi, DualPotential):
        phi = phi.phi
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (geometry.K,):
        raise ValueError(
            f"potential must be indexed by the union support ({geometry.K} points), "
            f"got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("potential must be finite")
    return phi


def dual_objective(phi, problem):
    """Range-penalized dual objective of a symmetric robust problem.

    ``phi`` is indexed by :func:`union_support` of ``(problem.mu, problem.nu)``
    (or is a :class:`DualPotential`). Invariant under adding a constant.
    """
    geom = _SymmetricDual(problem.mu, problem.nu, problem.cost, problem.eps)
    return geom.objective(_phi_array(phi, geom))


def potentials_from_flow(mu, nu, cost, eps, v, v_dummy, one_sided=False):
    """Turn column potentials of the augmented flow into a dual potential.

    ``phi`` is the augmented c-transform of the column potentials, evaluated
    on the union support (symmetric case) or on ``supp(mu)`` (one-sided case);
    the dummy column's potential fixes the constant. Dominates the flow duals,
    so it attains the optimal cost.
    """
    v = np.asarray(v, dtype=float)
    if one_sided:
        support = mu.points
        C = cost.matrix(support, nu.points)
        phi = (C - v[None, :]).min(axis=1)
        if v_dummy is not None:
            phi = np.minimum(phi, -v_dummy)
        phi_c = _c_transform_matrix(phi, C)
        obj = one_sided_dual_objective(phi, mu, nu, eps, cost)
        return DualPotential(support, phi, phi_c, eps, obj, np.arange(mu.size), None, True)
    support, mu_index, nu_index = union_support(mu, nu)
    C = cost.matrix(support, nu.points)
    phi = (C - v[None, :]).min(axis=1)
    if v_dummy is not None:
        phi = np.minimum(phi, -v_dummy)
    return _SymmetricDual(mu, nu, cost, eps).potential(phi)


@njit(cache=True, nogil=True)
def _ascent_kernel(phi0, a, b_idx_mass, C_SS, nu_index, eps, step0, iters, project_every):
    # normalized supergradient steps step0 / sqrt(t + 1)
    K = phi0.shape[0]
    m = nu_index.shape[0]
    phi = phi0.copy()
    best_phi = phi0.copy()
    best_obj = -np.inf
    phi_c = np.empty(K)
    grad = np.empty(K)
    for t in range(iters + 1):
        if project_every > 0 and t > 0 and t % project_every == 0:
            # phi <- (phi^c)^c over the support
            for y in range(K):
                best = np.inf
                for x in range(K):
                    val = C_SS[x, y] - phi[x]
                    if val < best:
                        best = val
                phi_c[y] = best
            for x in range(K):
                best = np.inf
                for y in range(K):
                    val = C_SS[x, y] - phi_c[y]
                    if val < best:
                        best = val
                phi[x] = best
        # objective and supergradient
        for x in range(K):
            grad[x] = a[x]
        obj = 0.0
        for x in range(K):
            obj += a[x] * phi[x]
        for j in range(m):
            y = nu_index[j]
            best = np.inf
            arg = 0
            for x in range(K):
                val = C_SS[x, y] - phi[x]
                if val < best:
                    best = val
                    arg = x
            obj += b_idx_mass[j] * best
            grad[arg] -= b_idx_mass[j]
        hi = phi.max()
        lo = phi.min()
        obj -= eps * (hi - lo)
        if not np.isfinite(obj):
            return best_phi, best_obj, False
        if obj > best_obj:
            best_obj = obj
            best_phi[:] = phi
        if t == iters:
            break
        n_hi = 0
        n_lo = 0
        for x in range(K):
            if phi[x] == hi:
                n_hi += 1
            if phi[x] == lo:
                n_lo += 1
        for x in range(K):
            if phi[x] == hi:
                grad[x] -= eps / n_hi
            if phi[x] == lo:
                grad[x] += eps / n_lo
        norm = 0.0
        for x in range(K):
            norm += grad[x] * grad[x]
        if norm == 0.0:
            break
        step = step0 / np.sqrt(t + 1.0) / np.sqrt(norm)
        for x in range(K):
            phi[x] += step * grad[x]
    return best_phi, best_obj, True


def _double_transform(phi, C_SS):
    phi_c = _c_transform_matrix(phi, C_SS)
    return (C_SS - phi_c[None, :]).min(axis=1)


def _smoothed_polish(geom, nu_weights, eps, phi, temperatures):
    # entropic smoothing of the column minima and of the range penalty, which
    # gets the iterate off kinks where single supergradients stall
    C = geom.C_SS[:, geom.nu_index]
    for gam in temperatures:
        def negative(x, gam=gam):
            M = (x[:, None] - C) / gam
            P = softmax(M, axis=0)
            soft_min = -gam * logsumexp(M, axis=0)
            obj = (geom.a @ x + nu_weights @ soft_min
                   - eps * gam * (logsumexp(x / gam) + logsumexp(-x / gam)))
            grad = geom.a - P @ nu_weights - eps * (softmax(x / gam) - softmax(-x / gam))
            return -obj, -grad
        res = minimize(negative, phi, jac=True, method="L-BFGS-B",
                       options={"maxiter": 300, "gtol": 1e-12, "ftol": 1e-15})
        if np.all(np.isfinite(res.x)):
            phi = res.x
    return phi


def dual_ascent(problem, step0=None, iters=9000, seed=0, project_every=25,
                phases=6, polish=True):
    """Maximize the dual objective by projected supergradient ascent.

    The budget of ``iters`` steps is split into ``phases`` runs. Each run
    restarts from the best iterate so far with half the previous ``step0``
    (default: max cost / 10) and takes normalized steps ``step0 / sqrt(t + 1)``.
    Every ``project_every`` steps the iterate is replaced by its double
    c-transform, which never lowers the objective. With ``polish`` the best
    iterate is refined on an entropically smoothed objective, and the polished
    point is kept only if its exact objective is higher. Returns a c-concave
    potential.
    """
    eps = problem.eps
    if eps < 0.0:
        raise ValueError("dual_ascent needs eps >= 0")
    geom = _SymmetricDual(problem.mu, problem.nu, problem.cost, problem.eps)
    cmax = float(geom.C_SS.max()) if geom.C_SS.size else 0.0
    if step0 is None:
        step0 = cmax / 10.0 if cmax > 0 else 1.0
    rng = check_random_state(seed)
    phi = 1e-6 * (cmax + 1.0) * rng.standard_normal(geom.K)
    phi = _double_transform(phi, geom.C_SS)
    nu_w = problem.nu.weights.astype(float)
    nu_idx = geom.nu_index.astype(np.int64)
    phases = max(int(phases), 1)
    per_phase = max(int(iters) // phases, 1)
    best_obj = -np.inf
    step = float(step0)
    for _ in range(phases):
        phi, obj, ok = _ascent_kernel(phi, geom.a, nu_w, geom.C_SS, nu_idx, float(eps),
                                      step, per_phase, int(project_every))
        if not ok or not np.isfinite(obj):
            raise NumericalFailure("dual objective became non-finite")
        best_obj = max(best_obj, obj)
        step *= 0.5
    phi = _double_transform(phi, geom.C_SS)
    if polish and cmax > 0 and geom.K > 1:
        cand = _smoothed_polish(geom, nu_w, float(eps), phi, cmax * np.array([1e-5, 1e-6]))
        cand = _double_transform(cand, geom.C_SS)
        if geom.objective(cand) > geom.objective(phi):
            phi = cand
    if not np.isfinite(geom.objective(phi)):
        raise NumericalFailure("dual objective became non-finite")
    return geom.potential(phi)


def loss_trimming_objective(phi, mu, nu, eps, cost=None):
    """Trimmed dual objective for uniform measures on ``n`` points each.

    Drops the ``eps * n`` largest values of ``phi`` on ``supp(mu)`` and of its
    c-transform on ``supp(nu)``, averaging what remains over ``n``. ``phi`` is
    indexed by :func:`union_support`.
    """
    cost = cost if cost is not None else GroundCost()
    eps = check_radius(eps, upper=1.0 + 1e-12)
    n = mu.size
    if nu.size != n or not (np.allclose(mu.weights, 1.0 / n, rtol=0, atol=1e-12)
                           and np.allclose(nu.weights, 1.0 / n, rtol=0, atol=1e-12)):
        raise Unsupported("loss trimming needs uniform measures on the same number of points")
    k = eps * n
    if abs(k - round(k)) > 1e-9:
        raise Unsupported("eps * n must be an integer")
    k = int(round(k))
    support, mu_index, nu_index = union_support(mu, nu)
    if isinstance(phi, DualPotential):
        phi = phi.phi
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (support.shape[0],):
        raise ValueError("potential must be indexed by the union support")
    C = cost.matrix(support, nu.points)
    phi_c = _c_transform_matrix(phi, C)
    kept_mu = np.sort(phi[mu_index])[: n - k]
    kept_nu = np.sort(phi_c)[: n - k]
    return float((kept_mu.sum() + kept_nu.sum()) / n)


def one_sided_dual_objective(phi, mu_tilde, nu, eps, cost=None):
    """``sum phi dmu + (1 - eps) sum phi_c dnu - eps max phi`` with ``phi`` on
    ``supp(mu_tilde)``."""
    cost = cost if cost is not None else GroundCost()
    eps = check_radius(eps)
    if isinstance(phi, DualPotential):
        phi = phi.phi
    phi = np.asarray(phi, dtype=float)
    C = cost.matrix(mu_tilde.points, nu.points)
    phi_c = _c_transform_matrix(phi, C)
    return float(mu_tilde.weights @ phi + (1.0 - eps) * (nu.weights @ phi_c) - eps * phi.max())


def asymmetric_dual_objective(phi, problem):
    """Dual objective for radii ``(eps_mu, eps_nu)``; ``phi`` on the union support.

    ``(1-e2) sum phi dmu + (1-e1) sum phi_c dnu + (1-e1) e2 min phi - (1-e2) e1 max phi``
    """
    e1, e2 = problem.eps_mu, problem.eps_nu
    mu, nu = problem.mu, problem.nu
    support, mu_index, nu_index = union_support(mu, nu)
    phi = np.asarray(phi.phi if isinstance(phi, DualPotential) else phi, dtype=float)
    C_SS = problem.cost.matrix(support, support)
    phi_c = _c_transform_matrix(phi, C_SS)
    return float((1 - e2) * (mu.weights @ phi[mu_index])
                 + (1 - e1) * (nu.weights @ phi_c[nu_index])
                 + (1 - e1) * e2 * phi.min() - (1 - e2) * e1 * phi.max())


def check_maximizer_structure(solution):
    """How far the trimmed mass sits from the extreme level sets of the potential.

    Returns ``{"mu_gap": ..., "nu_gap": ...}`` where ``mu_gap`` is the largest
    ``max phi - phi(x)`` over atoms ``x`` of the mass trimmed from ``mu`` and
    ``nu_gap`` the largest ``phi(y) - min phi`` over atoms trimmed from ``nu``.
    Both vanish for an exact primal-dual pair.
    """
    pot = solution.potentials
    if pot is None:
        raise NoPotentials("solution carries no dual potentials")
    phi = pot.phi
    lookup = {x.tobytes(): i for i, x in enumerate(pot.support)}
    hi, lo = phi.max(), phi.min()
    mu_gap = 0.0
    for x in solution.removed_mu.points:
        mu_gap = max(mu_gap, float(hi - phi[lookup[x.tobytes()]]))
    nu_gap = 0.0
    if not pot.one_sided:
        for y in solution.removed_nu.points:
            nu_gap = max(nu_gap, float(phi[lookup[y.tobytes()]] - lo))
    return {"mu_gap": mu_gap, "nu_gap": nu_gap,
            "removed_mu_atoms": solution.removed_mu.size,
            "removed_nu_atoms": solution.removed_nu.size}
