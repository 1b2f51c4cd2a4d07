"""Average- and max-sliced robust distances over k-dimensional projections."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._validation import check_exponent, check_radius, check_random_state
from .exact import RobustProblem, solve_robust
from .exceptions import InvalidDimensions
from .measures import DiscreteMeasure, GroundCost

FRAME_TOL = 1e-10


@dataclass(frozen=True)
class ProjectionFrame:
    """A ``d x k`` matrix with orthonormal columns."""

    U: np.ndarray

    def __post_init__(self):
        U = np.array(self.U, dtype=float)
        if U.ndim != 2 or U.shape[1] > U.shape[0] or U.shape[1] < 1:
            raise InvalidDimensions("frame must be d x k with 1 <= k <= d")
        err = np.abs(U.T @ U - np.eye(U.shape[1])).max()
        if not err <= FRAME_TOL:
            raise InvalidDimensions(f"frame columns are not orthonormal (error {err:.3g})")
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    @property
    def d(self):
        return self.U.shape[0]

    @property
    def k(self):
        return self.U.shape[1]


@dataclass(frozen=True)
class SlicedEstimate:
    value: float
    value_p: float
    std_error: float
    std_error_p: float
    num_projections: int
    seed: int
    frames: Optional[Tuple[ProjectionFrame, ...]] = None
    per_frame: Optional[np.ndarray] = None


def _orthonormalize(A):
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs[None, :]


def _haar(rng, d, k):
    return _orthonormalize(rng.standard_normal((d, k)))


def sample_frame(d, k, seed=0):
    """Haar-distributed frame from the QR factor of a Gaussian matrix."""
    d, k = int(d), int(k)
    if not 1 <= k <= d:
        raise InvalidDimensions(f"need 1 <= k <= d, got k={k}, d={d}")
    return ProjectionFrame(_haar(check_random_state(seed), d, k))


def sample_frames(d, k, count, seed=0):
    d, k = int(d), int(k)
    if not 1 <= k <= d:
        raise InvalidDimensions(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = check_random_state(seed)
    return tuple(ProjectionFrame(_haar(rng, d, k)) for _ in range(int(count)))


def _as_matrix(frame):
    return frame.U if isinstance(frame, ProjectionFrame) else np.asarray(frame, dtype=float)


def project(measure, frame):
    """Pushforward of ``measure`` under ``x -> U^T x``."""
    U = _as_matrix(frame)
    if measure.dim != U.shape[0]:
        raise InvalidDimensions(
            f"measure lives in dimension {measure.dim}, frame in {U.shape[0]}")
    if measure.size == 0:
        return DiscreteMeasure.zero(U.shape[1])
    return DiscreteMeasure(measure.points @ U, measure.weights, dim=U.shape[1])


def _parallel_map(fn, items, threads):
    # results come back in input order whatever the thread count
    items = list(items)
    threads = int(threads or 1)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _frame_solution(mu, nu, U, eps, cost, method, sinkhorn_config):
    problem = RobustProblem.symmetric(project(mu, U), project(nu, U), eps, cost=cost)
    if method == "sinkhorn":
        from .sinkhorn import solve_robust_entropic
        return solve_robust_entropic(problem, sinkhorn_config)
    return solve_robust(problem, potentials=False)


def _frame_value_p(mu, nu, U, eps, cost, method="exact", sinkhorn_config=None):
    return _frame_solution(mu, nu, U, eps, cost, method, sinkhorn_config).value_p


def _check_inputs(mu, nu, p, k, eps):
    p = check_exponent(p)
    eps = check_radius(eps)
    if mu.dim != nu.dim:
        raise InvalidDimensions("measures live in different dimensions")
    k = int(k)
    if not 1 <= k <= mu.dim:
        raise InvalidDimensions(f"need 1 <= k <= d, got k={k}, d={mu.dim}")
    return p, k, eps


def _max_frame_ascent(mu, nu, U0, eps, cost, steps, step0, method, sinkhorn_config):
    # Danskin ascent: gradient of sum pi_ij |U^T (x_i - y_j)|^p at the current plan
    p = cost.p
    X, Y = mu.points, nu.points

    def evaluate(U):
        sol = _frame_solution(mu, nu, U, eps, cost, method, sinkhorn_config)
        return sol.value_p, sol.plan_matrix

    U = U0
    val, plan = evaluate(U)
    step = step0
    for _ in range(steps):
        i, j = np.nonzero(plan > 0)
        if i.size == 0:
            break
        Z = X[i] - Y[j]
        W = Z @ U
        norms = np.linalg.norm(W, axis=1)
        scale = np.zeros_like(norms)
        ok = norms > 0
        scale[ok] = p * plan[i[ok], j[ok]] * norms[ok] ** (p - 2.0)
        G = (Z * scale[:, None]).T @ W
        gnorm = np.linalg.norm(G)
        if gnorm == 0:
            break
        cand = _orthonormalize(U + step * G / gnorm)
        cval, cplan = evaluate(cand)
        if cval > val:
            U, val, plan = cand, cval, cplan
        else:
            step *= 0.5
            if step < 1e-10:
                break
    return val, U


def sliced_distance(mu, nu, p=1.0, k=1, eps=0.0, mode="average", num_projections=100,
                    restarts=20, steps=100, step0=0.1, seed=0, threads=1, frames=None,
                    method="exact", sinkhorn_config=None, metric="euclidean"):
    """Sliced ``W_p^eps`` over Haar-random ``k``-frames.

    ``average`` returns the Monte Carlo estimate of the mean per-frame
    ``value_p`` raised to ``1/p``, with standard errors on ``value_p`` and,
    by the delta method, on the value. ``max`` runs ``restarts`` ascents on
    the Stiefel manifold and returns the best frame found. Frames passed in
    ``frames`` replace the random ones in average mode and are extra
    starting points in max mode.
    """
    p, k, eps = _check_inputs(mu, nu, p, k, eps)
    cost = GroundCost(p=p, metric=metric)
    if mode not in ("average", "max"):
        raise ValueError(f"unknown mode {mode!r}")
    if method not in ("exact", "sinkhorn"):
        raise ValueError(f"unknown method {method!r}")
    if frames is not None:
        frames = tuple(f if isinstance(f, ProjectionFrame) else ProjectionFrame(f)
                       for f in frames)
        for f in frames:
            if f.d != mu.dim or f.k != k:
                raise InvalidDimensions("supplied frame has the wrong shape")

    if mode == "average":
        if frames is None:
            if int(num_projections) < 1:
                raise ValueError("num_projections must be at least 1")
            frames = sample_frames(mu.dim, k, num_projections, seed)
        vals = np.array(_parallel_map(
            lambda f: _frame_value_p(mu, nu, f.U, eps, cost, method, sinkhorn_config),
            frames, threads))
        m = vals.size
        mean_p = float(vals.mean())
        se_p = float(vals.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
        value = max(mean_p, 0.0) ** (1.0 / p)
        if mean_p > 0:
            se = se_p * (1.0 / p) * mean_p ** (1.0 / p - 1.0)
        else:
            se = 0.0
        return SlicedEstimate(value=value, value_p=mean_p, std_error=se, std_error_p=se_p,
                              num_projections=m, seed=seed, frames=None, per_frame=vals)

    rng = check_random_state(seed)
    starts = [_haar(rng, mu.dim, k) for _ in range(int(restarts))]
    if frames is not None:
        starts = [f.U for f in frames] + starts
    if not starts:
        raise ValueError("max mode needs at least one restart or frame")
    results = _parallel_map(
        lambda U: _max_frame_ascent(mu, nu, U, eps, cost, int(steps), float(step0),
                                    method, sinkhorn_config),
        starts, threads)
    vals = np.array([r[0] for r in results])
    best = int(np.argmax(vals))
    best_val = float(vals[best])
    return SlicedEstimate(value=max(best_val, 0.0) ** (1.0 / p), value_p=best_val,
                          std_error=0.0, std_error_p=0.0, num_projections=len(starts),
                          seed=seed, frames=(ProjectionFrame(results[best][1]),),
                          per_frame=vals)


def sliced_triangle_check(mu, kappa, nu, p=1.0, k=1, eps1=0.0, eps2=0.0,
                          num_projections=50, seed=0, tol=1e-8, threads=1):
    """Check the approximate triangle inequality for sliced distances.

    All three pairs are evaluated on one shared frame set, so the inequality
    ``W^{eps1+eps2}(mu, nu) <= W^{eps1}(mu, kappa) + W^{eps2}(kappa, nu)``
    holds frame by frame. It then passes to the average (Minkowski) and to
    the maximum over the frames.
    """
    p, k, _ = _check_inputs(mu, nu, p, k, 0.0)
    eps1 = check_radius(eps1)
    eps2 = check_radius(eps2)
    check_radius(eps1 + eps2)
    if kappa.dim != mu.dim:
        raise InvalidDimensions("measures live in different dimensions")
    cost = GroundCost(p=p)
    frames = sample_frames(mu.dim, k, num_projections, seed)

    def triple(f):
        return (_frame_value_p(mu, nu, f.U, eps1 + eps2, cost),
                _frame_value_p(mu, kappa, f.U, eps1, cost),
                _frame_value_p(kappa, nu, f.U, eps2, cost))

    vals = np.maximum(np.array(_parallel_map(triple, frames, threads)), 0.0)
    lhs, left, right = (vals[:, c] ** (1.0 / p) for c in range(3))
    avg = vals.mean(axis=0) ** (1.0 / p)
    report = {
        "per_frame_min_slack": float(np.min(left + right - lhs)),
        "average": {"lhs": float(avg[0]), "rhs": float(avg[1] + avg[2]),
                    "slack": float(avg[1] + avg[2] - avg[0])},
        "max": {"lhs": float(lhs.max()), "rhs": float(left.max() + right.max()),
                "slack": float(left.max() + right.max() - lhs.max())},
        "num_projections": len(frames),
    }
    report["holds"] = bool(report["per_frame_min_slack"] >= -tol
                           and report["average"]["slack"] >= -tol
                           and report["max"]["slack"] >= -tol)
    return report
