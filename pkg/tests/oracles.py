"""Slow reference implementations used only by the tests.

None of these share code with the package: the SVD is a one-sided Jacobi
iteration, simplex distances come from a refined barycentric grid, vertex
hunting and the loss are plain enumerations.
"""

import functools
import itertools

import numpy as np


def _round_robin(n):
    # circle-method schedule: n-1 rounds of n/2 disjoint pairs (n even)
    idx = list(range(n))
    rounds = []
    for _ in range(n - 1):
        rounds.append([(idx[i], idx[n - 1 - i]) for i in range(n // 2)])
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return rounds


def jacobi_svd(a, tol=1e-15, max_sweeps=60):
    """Full thin SVD of a tall matrix by one-sided (Hestenes) Jacobi rotations.

    Returns ``u, s, vt`` with singular values in decreasing order.
    """
    a = np.array(a, dtype=float)
    transposed = a.shape[0] < a.shape[1]
    if transposed:
        a = a.T
    m, n = a.shape
    pad = n % 2
    if pad:
        a = np.hstack([a, np.zeros((m, 1))])
    n2 = a.shape[1]
    v = np.eye(n2)
    schedule = [(np.array([i for i, _ in r]), np.array([j for _, j in r])) for r in _round_robin(n2)]
    for _ in range(max_sweeps):
        off = 0.0
        for left, right in schedule:
            ai, aj = a[:, left], a[:, right]
            alpha = (ai * ai).sum(axis=0)
            beta = (aj * aj).sum(axis=0)
            gamma = (ai * aj).sum(axis=0)
            scale = np.sqrt(alpha * beta)
            active = (scale > 0) & (np.abs(gamma) > tol * scale)
            if not active.any():
                continue
            off = max(off, float(np.max(np.abs(gamma[active]) / scale[active])))
            zeta = np.where(active, (beta - alpha) / np.where(active, 2 * gamma, 1.0), 0.0)
            t = np.where(active, np.sign(zeta) / (np.abs(zeta) + np.sqrt(1 + zeta**2)), 0.0)
            t = np.where(active & (zeta == 0), 1.0, t)
            c = 1 / np.sqrt(1 + t * t)
            s = c * t
            a[:, left], a[:, right] = c * ai - s * aj, s * ai + c * aj
            vi, vj = v[:, left], v[:, right]
            v[:, left], v[:, right] = c * vi - s * vj, s * vi + c * vj
        if off <= tol:
            break
    sv = np.linalg.norm(a, axis=0)
    order = np.argsort(-sv, kind="stable")[:n]
    sv = sv[order]
    u = a[:, order] / np.where(sv > 0, sv, 1.0)
    v = v[:n, order] if not pad else v[:, order][:n]
    if transposed:
        return v, sv, u.T
    return u, sv, v.T


def sin_max_angle(q1, q2):
    """Sine of the largest principal angle between two orthonormal bases."""
    resid = q2 - q1 @ (q1.T @ q2)
    return float(np.linalg.norm(resid, 2))


@functools.lru_cache(maxsize=None)
def _simplex_grid(k, step):
    m = int(round(1 / step))
    axes = np.meshgrid(*[np.arange(m + 1)] * (k - 1), indexing="ij")
    g = np.stack([a.ravel() for a in axes], axis=1)
    g = g[g.sum(axis=1) <= m] / m
    return np.hstack([g, 1 - g.sum(axis=1, keepdims=True)])


def grid_distance(b, vertices, step=1e-3, coarse=0.02, final=1e-9):
    """Distance from ``b`` to conv(vertices) by barycentric grid search.

    For K <= 3 the full grid at ``step`` is searched first; for K = 4 the
    start grid has spacing ``coarse``.  The best point is then refined by a
    pattern search whose step halves when no neighbour improves, down to ``final``,
    since a fixed grid is only first-order accurate for interior points.
    """
    v = np.asarray(vertices, dtype=float)
    b = np.asarray(b, dtype=float)
    k = len(v)
    h = step if k <= 3 else coarse
    w = _simplex_grid(k, h)
    best = w[np.argmin(np.linalg.norm(w @ v - b, axis=1))]
    best_d = float(np.linalg.norm(best @ v - b))
    offsets = np.array(list(itertools.product(range(-2, 3), repeat=k - 1)), dtype=float)
    # pattern search: move while a neighbour improves, otherwise halve the step
    for _ in range(100000):
        if h <= final or best_d == 0.0:
            break
        cand = best[:-1] + h * offsets
        cand = cand[(cand >= 0).all(axis=1) & (cand.sum(axis=1) <= 1)]
        cand = np.hstack([cand, 1 - cand.sum(axis=1, keepdims=True)])
        d = np.linalg.norm(cand @ v - b, axis=1)
        j = int(np.argmin(d))
        if d[j] < best_d:
            best, best_d = cand[j], float(d[j])
        else:
            h /= 2
    return best_d


def exact_distance_small(b, vertices):
    """Exact distance to conv(vertices) by enumerating every face (K <= 5).

    On each face the unconstrained least-squares point is accepted only if
    its barycentric weights are nonnegative; the minimum over faces is the
    distance.
    """
    v = np.asarray(vertices, dtype=float)
    b = np.asarray(b, dtype=float)
    best = np.inf
    for r in range(1, len(v) + 1):
        for face in itertools.combinations(range(len(v)), r):
            f = v[list(face)]
            base = f[0]
            if r == 1:
                best = min(best, float(np.linalg.norm(b - base)))
                continue
            e = (f[1:] - base).T
            c, *_ = np.linalg.lstsq(e, b - base, rcond=None)
            w = np.concatenate([[1 - c.sum()], c])
            if (w >= -1e-14).all():
                best = min(best, float(np.linalg.norm(b - base - e @ c)))
    return best


def brute_force_hunt(centers, k):
    """Best index tuple by full enumeration with exact face distances."""
    c = np.asarray(centers, dtype=float)
    best, best_idx = np.inf, None
    for idx in itertools.combinations(range(len(c)), k):
        v = c[list(idx)]
        if np.linalg.matrix_rank(v[1:] - v[0], tol=1e-9) < k - 1:
            continue
        r = max(exact_distance_small(x, v) for x in c)
        if r < best - 1e-12:
            best, best_idx = r, idx
    return best_idx, best


def brute_force_loss(a_hat, a):
    k = a.shape[1]
    best = np.inf
    for perm in itertools.permutations(range(k)):
        total = 0.0
        for j in range(k):
            total += float(np.abs(a_hat[:, j] - a[:, perm[j]]).sum())
        best = min(best, total)
    return best


def lloyd_best(x, l, restarts=200, seed=0, iters=200):
    """Best inertia over many random-init Lloyd runs (no k-means++)."""
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(restarts):
        c = x[rng.choice(len(x), size=l, replace=False)].copy()
        for _ in range(iters):
            lab = np.argmin(((x[:, None, :] - c[None]) ** 2).sum(-1), axis=1)
            new = np.array([x[lab == j].mean(0) if (lab == j).any() else c[j] for j in range(l)])
            if np.array_equal(new, c):
                break
            c = new
        lab = np.argmin(((x[:, None, :] - c[None]) ** 2).sum(-1), axis=1)
        best = min(best, float(((x - c[lab]) ** 2).sum()))
    return best
