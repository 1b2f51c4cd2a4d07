"""Primal network simplex for the balanced transportation problem.

Supplies and demands are integers (callers scale masses by ``MASS_SCALE``), so
flows are exact and the strongly feasible spanning tree rule rules out
cycling. Node ``n + m`` is an artificial root joined to every node by a
big-M arc; real arcs ``i -> n + j`` are implicit, arc id ``i * m + j``.
"""
import numpy as np
from numba import njit

MASS_SCALE = 10**12

_OK = 0
_MAX_ITER = 1


@njit(cache=True, nogil=True)
def _endpoints(e, n, m, E, root):
    if e < E:
        return e // m, n + e % m
    k = e - E
    if k < n:
        return k, root
    return root, k


@njit(cache=True, nogil=True)
def _rebuild(tree, n, m, E, root, C, art, parent, pred, up, depth, pi,
             deg, start, adj, queue):
    N = n + m + 1
    deg[:] = 0
    for t in range(N - 1):
        s, h = _endpoints(tree[t], n, m, E, root)
        deg[s] += 1
        deg[h] += 1
    start[0] = 0
    for v in range(N):
        start[v + 1] = start[v] + deg[v]
        deg[v] = 0
    for t in range(N - 1):
        e = tree[t]
        s, h = _endpoints(e, n, m, E, root)
        adj[start[s] + deg[s]] = e
        deg[s] += 1
        adj[start[h] + deg[h]] = e
        deg[h] += 1
    parent[root] = -1
    pred[root] = -1
    depth[root] = 0
    pi[root] = 0.0
    head = 0
    tail = 1
    queue[0] = root
    while head < tail:
        v = queue[head]
        head += 1
        for k in range(start[v], start[v + 1]):
            e = adj[k]
            if e == pred[v]:
                continue
            s, h = _endpoints(e, n, m, E, root)
            c = C[s, h - n] if e < E else art
            if s == v:
                w = h
                up[w] = False
                pi[w] = pi[v] + c
            else:
                w = s
                up[w] = True
                pi[w] = pi[v] - c
            parent[w] = v
            pred[w] = e
            depth[w] = depth[v] + 1
            queue[tail] = w
            tail += 1


@njit(cache=True, nogil=True)
def network_simplex(a, b, C, max_iter):
    """Solve ``min <F, C>`` over integer flows with row sums ``a``, column sums ``b``.

    Returns ``(F, u, v, status, iterations)`` with dual potentials satisfying
    ``u[i] + v[j] <= C[i, j]`` (up to rounding) and equality on the support.
    """
    n = a.shape[0]
    m = b.shape[0]
    N = n + m + 1
    root = n + m
    E = n * m
    cmax = 0.0
    for i in range(n):
        for j in range(m):
            if abs(C[i, j]) > cmax:
                cmax = abs(C[i, j])
    art = (cmax + 1.0) * N
    tol = 1e-12 * (cmax + 1.0)

    flow = np.zeros(E + n + m, dtype=np.int64)
    tree = np.empty(N - 1, dtype=np.int64)
    where = np.full(E + n + m, -1, dtype=np.int64)
    for k in range(n + m):
        e = E + k
        tree[k] = e
        where[e] = k
        flow[e] = a[k] if k < n else b[k - n]

    parent = np.empty(N, dtype=np.int64)
    pred = np.empty(N, dtype=np.int64)
    up = np.zeros(N, dtype=np.bool_)
    depth = np.empty(N, dtype=np.int64)
    pi = np.empty(N, dtype=np.float64)
    deg = np.empty(N, dtype=np.int64)
    start = np.empty(N + 1, dtype=np.int64)
    adj = np.empty(2 * (N - 1), dtype=np.int64)
    queue = np.empty(N, dtype=np.int64)
    _rebuild(tree, n, m, E, root, C, art, parent, pred, up, depth, pi,
             deg, start, adj, queue)

    block = max(int(np.sqrt(E)), 10)
    block = min(block, E)
    next_arc = 0
    status = _OK
    it = 0
    big = np.iinfo(np.int64).max
    while True:
        # block search pivot rule over the real arcs
        best = -1
        best_rc = -tol
        scanned = 0
        cnt = 0
        e = next_arc
        while scanned < E:
            i = e // m
            j = e % m
            rc = C[i, j] + pi[i] - pi[n + j]
            if rc < best_rc:
                best_rc = rc
                best = e
            scanned += 1
            cnt += 1
            e += 1
            if e == E:
                e = 0
            if cnt == block:
                if best >= 0:
                    break
                cnt = 0
        if best < 0:
            break
        next_arc = e
        it += 1
        if it > max_iter:
            status = _MAX_ITER
            break

        s = best // m
        t = n + best % m
        # apex of the cycle
        u = s
        v = t
        while u != v:
            if depth[u] > depth[v]:
                u = parent[u]
            elif depth[v] > depth[u]:
                v = parent[v]
            else:
                u = parent[u]
                v = parent[v]
        apex = u

        # leaving arc: last blocking arc along the cycle orientation
        delta = big
        u_out = -1
        u = s
        while u != apex:
            if up[u]:
                d = flow[pred[u]]
                if d < delta:
                    delta = d
                    u_out = u
            u = parent[u]
        u = t
        while u != apex:
            if not up[u]:
                d = flow[pred[u]]
                if d <= delta:
                    delta = d
                    u_out = u
            u = parent[u]

        if delta > 0:
            u = s
            while u != apex:
                if up[u]:
                    flow[pred[u]] -= delta
                else:
                    flow[pred[u]] += delta
                u = parent[u]
            u = t
            while u != apex:
                if up[u]:
                    flow[pred[u]] += delta
                else:
                    flow[pred[u]] -= delta
                u = parent[u]
        flow[best] = delta

        leaving = pred[u_out]
        slot = where[leaving]
        where[leaving] = -1
        tree[slot] = best
        where[best] = slot
        _rebuild(tree, n, m, E, root, C, art, parent, pred, up, depth, pi,
                 deg, start, adj, queue)

    F = np.empty((n, m), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            F[i, j] = flow[i * m + j]
    uu = np.empty(n, dtype=np.float64)
    vv = np.empty(m, dtype=np.float64)
    for i in range(n):
        uu[i] = -pi[i]
    for j in range(m):
        vv[j] = pi[n + j]
    art_flow = 0
    for k in range(n + m):
        art_flow += flow[E + k]
    if art_flow != 0 and status == _OK:
        status = 2
    return F, uu, vv, status, it


def to_integer_masses(weights, total):
    """Round ``weights * MASS_SCALE`` to integers summing exactly to ``total``.

    Largest-remainder rounding: floors first, then the missing units go to
    the entries with the largest fractional parts. An entry that is already
    an exact integer keeps its value unless every entry is.
    """
    scaled = np.maximum(np.asarray(weights, dtype=float) * MASS_SCALE, 0.0)
    base = np.floor(scaled)
    frac = scaled - base
    out = base.astype(np.int64)
    diff = int(total) - int(out.sum())
    if diff > 0:
        order = np.argsort(-frac, kind="stable")
        k = order.size
        out[order[:diff % k]] += 1
        out += diff // k
    elif diff < 0:
        # float noise only: take single units back from the smallest remainders
        need = -diff
        if int(out.sum()) < need:
            raise ValueError("cannot round masses to the requested total")
        order = np.argsort(frac, kind="stable")
        while need:
            for idx in order:
                if need and out[idx] > 0:
                    out[idx] -= 1
                    need -= 1
    return out
