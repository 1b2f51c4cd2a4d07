"""Entropic fast path for the robust distance on the augmented cost."""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._validation import check_radius
from .exact import TransportSolution, _root, augmented_cost
from .exceptions import NotConverged
from .measures import DiscreteMeasure


@dataclass(frozen=True)
class SinkhornConfig:
    """``reg`` is the entropic regularization in cost units."""

    reg: float = 1e-2
    max_iters: int = 20000
    tol: float = 1e-7

    def __post_init__(self):
        if not (np.isfinite(self.reg) and self.reg > 0):
            raise ValueError("reg must be positive")
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ValueError("tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")


def _dual_value(f, g, a, b, C, lam):
    return float(f @ a + g @ b - lam * np.exp((f[:, None] + g[None, :] - C) / lam).sum())


def _sinkhorn_log(a, b, C, reg, max_iters, tol, f=None, g=None, history=None):
    log_a = np.log(a)
    log_b = np.log(b)
    f = np.zeros_like(a) if f is None else f
    g = np.zeros_like(b) if g is None else g
    err = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        f = reg * (log_a - logsumexp((g[None, :] - C) / reg, axis=1))
        g = reg * (log_b - logsumexp((f[:, None] - C) / reg, axis=0))
        if it % 10 == 0 or it == max_iters:
            if history is not None:
                history.append(_dual_value(f, g, a, b, C, reg))
            # columns are exact after the g update, rows carry the error
            P = np.exp((f[:, None] + g[None, :] - C) / reg)
            err = np.abs(P.sum(axis=1) - a).sum()
            if err <= tol:
                break
    return f, g, err, it


def _round_to_marginals(P, a, b):
    # Altschuler, Weed and Rigollet style rounding onto the transport polytope
    r = P.sum(axis=1)
    x = np.minimum(a / np.where(r > 0, r, 1.0), 1.0)
    P = P * x[:, None]
    c = P.sum(axis=0)
    y = np.minimum(b / np.where(c > 0, c, 1.0), 1.0)
    P = P * y[None, :]
    err_r = np.maximum(a - P.sum(axis=1), 0.0)
    err_c = np.maximum(b - P.sum(axis=0), 0.0)
    total = err_r.sum()
    if total > 0:
        P = P + np.outer(err_r, err_c) / total
    return P


def _clear_dummy_pair(P):
    # mass on (dummy, dummy) is swapped with real entries: (i,j),(d,d) -> (i,d),(d,j)
    n, m = P.shape[0] - 1, P.shape[1] - 1
    left = P[n, m]
    if left <= 0:
        return P
    P = P.copy()
    real = P[:n, :m]
    for k in np.argsort(-real, axis=None, kind="stable"):
        if left <= 0:
            break
        i, j = divmod(int(k), m)
        move = min(real[i, j], left)
        if move <= 0:
            break
        P[i, j] -= move
        P[i, m] += move
        P[n, j] += move
        left -= move
    P[n, m] = left
    return P


def solve_robust_entropic(problem, config=None):
    """Approximate ``W_p^eps`` by Sinkhorn on the augmented problem.

    The regularization is annealed from the largest cost down to
    ``config.reg``. The final plan is rounded onto the augmented marginals, and
    any mass on the dummy pair is then swapped onto dummy rows and columns.
    Its cost is therefore an upper bound on the exact value. Raises
    :class:`NotConverged` carrying the rounded result when the marginal
    violation stays above ``config.tol``.
    """
    config = config if config is not None else SinkhornConfig()
    eps = check_radius(problem.eps)
    mu, nu, cost = problem.mu, problem.nu, problem.cost
    n, m = mu.size, nu.size
    C = problem.cost_matrix()
    a = mu.weights / mu.mass
    b = nu.weights / nu.mass
    if eps > 0:
        Cbar = augmented_cost(C)
        a = np.append(a, eps)
        b = np.append(b, eps)
    else:
        Cbar = C
    scale = float(Cbar.max()) if Cbar.size else 0.0
    f = g = None
    lam = max(scale, config.reg)
    warm_iters = max(config.max_iters // 10, 50)
    while lam > config.reg:
        f, g, _, _ = _sinkhorn_log(a, b, Cbar, lam, warm_iters, config.tol, f, g)
        lam = max(lam / 4.0, config.reg)
    history = []
    f, g, err, iters = _sinkhorn_log(a, b, Cbar, config.reg, config.max_iters,
                                     config.tol, f, g, history)
    P = np.exp((f[:, None] + g[None, :] - Cbar) / config.reg)
    P = _round_to_marginals(P, a, b)
    if eps > 0:
        P = _clear_dummy_pair(P)
        plan = P[:n, :m]
        removed_mu = DiscreteMeasure(mu.points, np.maximum(P[:n, m], 0.0), dim=mu.dim)
        removed_nu = DiscreteMeasure(nu.points, np.maximum(P[n, :m], 0.0), dim=nu.dim)
    else:
        plan = P
        removed_mu = DiscreteMeasure.zero(mu.dim)
        removed_nu = DiscreteMeasure.zero(nu.dim)
    value_p = float(np.sum(plan * C))
    solution = TransportSolution(
        value=_root(value_p, cost.p),
        value_p=value_p,
        plan_matrix=plan,
        removed_mu=removed_mu,
        removed_nu=removed_nu,
        p=cost.p,
        potentials=None,
        approximate=True,
        info={"iterations": iters, "marginal_violation": float(err),
              "reg": config.reg, "dual_history": history},
    )
    if not err <= config.tol:
        raise NotConverged(
            f"marginal violation {err:.3g} above tol after {iters} iterations", solution)
    return solution
