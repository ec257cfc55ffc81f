"""Two-stage vertex hunting on the eigen-ratio point cloud.

Stage one clusters the points with Lloyd's k-means (k-means++ seeding,
best of several restarts).  Stage two picks the ``K`` cluster centers whose
simplex minimizes the largest center-to-simplex distance, by exhaustive
search over all ``C(L, K)`` subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np
import scipy.linalg

from .errors import ConfigError

ZERO_DISTANCE = 1e-12
AFFINE_RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centers: np.ndarray  # (L, d)
    assignment: np.ndarray  # (p,)
    inertia: float
    n_iter: int = 0
    inertia_path: tuple = ()  # inertia after every assignment step of the winning run


@dataclass(frozen=True, eq=False)
class VertexHuntResult:
    vertices: np.ndarray  # (K, K-1)
    selected_indices: tuple
    max_residual: float
    fallback_used: bool = False
    n_candidates_evaluated: int = field(default=0, compare=False)


# --------------------------------------------------------------------------
# k-means


def _sq_dists(x, centers):
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("pld,pld->pl", diff, diff)


def _kmeans_pp(x, l, rng):
    p = len(x)
    idx = [int(rng.integers(p))]
    closest = _sq_dists(x, x[idx])[:, 0]
    for _ in range(1, l):
        total = closest.sum()
        # inverse-CDF draw over the D^2 weights
        u = rng.random() * total
        j = int(np.searchsorted(np.cumsum(closest), u, side="right"))
        j = min(j, p - 1)
        while closest[j] == 0:  # never re-pick a point already covered exactly
            j = (j + 1) % p
        idx.append(j)
        closest = np.minimum(closest, _sq_dists(x, x[j : j + 1])[:, 0])
    return x[idx].copy()


def _lloyd(x, centers, max_iter):
    l = len(centers)
    labels = None
    path = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centers)
        new_labels = np.argmin(d2, axis=1)
        sizes = np.bincount(new_labels, minlength=l)
        for c in np.flatnonzero(sizes == 0):
            # move the worst-served point (from a cluster that can spare it)
            own = d2[np.arange(len(x)), new_labels]
            own = np.where(sizes[new_labels] > 1, own, -1.0)
            j = int(np.argmax(own))
            sizes[new_labels[j]] -= 1
            new_labels[j] = c
            sizes[c] = 1
            centers[c] = x[j]
            d2[:, c] = _sq_dists(x, x[j : j + 1])[:, 0]
        path.append(float(d2[np.arange(len(x)), new_labels].sum()))
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        centers = sums / np.bincount(labels, minlength=l)[:, None]
    d2 = _sq_dists(x, centers)
    labels = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(len(x)), labels].sum())
    return centers, labels, inertia, it, path


def kmeans(points, l, seed=0, restarts=10, max_iter=300) -> KMeansResult:
    """Lloyd's k-means with k-means++ seeding; best of ``restarts`` runs.

    Raises ``ConfigError`` when there are fewer than ``l`` distinct points.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if not 1 <= l <= len(x):
        raise ConfigError(f"l={l} must lie in 1..{len(x)}")
    if restarts < 1 or max_iter < 1:
        raise ConfigError("restarts and max_iter must be positive")
    uniq, first, inverse = np.unique(x, axis=0, return_index=True, return_inverse=True)
    if len(uniq) < l:
        raise ConfigError(f"only {len(uniq)} distinct points for l={l} clusters")
    if len(uniq) == l:
        # one cluster per distinct point is the exact optimum (inertia 0)
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(l)
        return KMeansResult(centers=uniq[order].copy(), assignment=rank[inverse.ravel()], inertia=0.0)

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        run = _lloyd(x, _kmeans_pp(x, l, rng), max_iter)
        if best is None or run[2] < best[2]:
            best = run
    centers, labels, inertia, it, path = best
    return KMeansResult(centers=centers, assignment=labels, inertia=inertia, n_iter=it, inertia_path=tuple(path))


# --------------------------------------------------------------------------
# distance to a simplex


def _solve_face(b, v, face):
    """Closest point to ``b`` on the affine hull of ``v[face]``; barycentric weights."""
    base = v[face[0]]
    if len(face) == 1:
        return np.ones(1)
    diffs = (v[face[1:]] - base).T
    c, *_ = np.linalg.lstsq(diffs, b - base, rcond=None)
    return np.concatenate(([1.0 - c.sum()], c))


def project_onto_simplex(b, vertices):
    """Euclidean projection of ``b`` onto the convex hull of ``vertices``.

    Active-set (Lawson-Hanson style) solution of
    ``min ||b - V^T w||`` over weights ``w >= 0`` with ``sum(w) = 1``.  Each
    subproblem is solved in the affine parameterization of the current face.

    Returns
    -------
    point : (K-1,) array
    weights : (K,) array
    """
    v = np.asarray(vertices, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    k = len(v)
    scale = max(1.0, float(np.abs(v).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    tol = 1e-12 * scale * scale

    w = np.zeros(k)
    start = int(np.argmin(((v - b) ** 2).sum(axis=1)))
    w[start] = 1.0
    free = [start]
    for _ in range(100 * k):
        grad = v @ (v.T @ w - b)
        mu = grad[free].mean()
        slack = grad - mu
        slack[free] = np.inf
        j = int(np.argmin(slack))
        if slack[j] >= -tol:
            break
        free.append(j)
        for _ in range(k + 1):
            face = np.array(free)
            z = _solve_face(b, v, face)
            if (z > 0).all():
                w[:] = 0.0
                w[face] = z
                break
            cur = w[face]
            neg = z <= 0
            step = np.min(cur[neg] / (cur[neg] - z[neg]))
            w[face] = cur + step * (z - cur)
            keep = w[face] > 1e-15
            if keep.all():
                # numerical stall: the entering vertex did not gain weight
                keep[np.argmin(w[face])] = False
            w[face[~keep]] = 0.0
            free = [f for f, kp in zip(free, keep) if kp]
            if not free:
                free = [start]
                w[start] = 1.0
        else:
            break
    w = np.clip(w, 0.0, None)
    w /= w.sum()
    return v.T @ w, w


def distance_to_simplex(b, vertices) -> float:
    """Distance from ``b`` to the simplex spanned by ``vertices`` (0 inside).

    Distances at or below 1e-12 are reported as exactly 0.
    """
    v = np.asarray(vertices, dtype=float)
    if len(v) < 2:
        raise ConfigError("a simplex needs K >= 2 vertices")
    point, _ = project_onto_simplex(b, v)
    dist = float(np.linalg.norm(np.asarray(b, dtype=float).ravel() - point))
    return 0.0 if dist <= ZERO_DISTANCE else dist


# --------------------------------------------------------------------------
# simplex selection


def affinely_independent(points) -> bool:
    """Rank test on ``[v_2 - v_1, ..., v_K - v_1]`` via pivoted QR."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 1:
        return True
    diffs = (pts[1:] - pts[0]).T
    norms = np.linalg.norm(diffs, axis=0)
    if norms.max() == 0 or diffs.shape[1] > diffs.shape[0]:
        return False
    r = scipy.linalg.qr(diffs, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    # differences at rounding-noise level of the coordinates carry no direction
    noise = 64 * np.finfo(float).eps * np.abs(pts).max()
    tol = max(AFFINE_RANK_TOL * norms.max(), noise)
    return bool(len(diag) == diffs.shape[1] and (diag > tol).all())


@lru_cache(maxsize=None)
def _combinations_cached(n, r):
    if r == 0:
        return np.zeros((1, 0), dtype=np.int32)
    out = []
    for first in range(n - r + 1):
        rest = _combinations_cached(n - first - 1, r - 1) + first + 1
        out.append(np.column_stack([np.full(len(rest), first, dtype=np.int32), rest]))
    res = np.concatenate(out) if out else np.zeros((0, r), dtype=np.int32)
    res.setflags(write=False)
    return res


def _combinations(n, r):
    """All r-subsets of range(n) as rows, in lexicographic order."""
    res = _combinations_cached(n, r)
    _combinations_cached.cache_clear()
    return res


def _colex_rank(sub, table):
    # sum_i C(sub[:, i], i + 1) for increasing columns
    return sum(table[sub[:, i], i + 1] for i in range(sub.shape[1]))


def _facet_bounds(centers, combos, k):
    """Lower bound on the max center-to-simplex distance for every subset.

    A point's distance to a simplex is at least its distance beyond any
    violated facet hyperplane; the bound is the worst such violation over
    all centers and facets.
    """
    L, d = centers.shape
    facets = _combinations(L, k - 1)
    if k == 2:
        normals = np.ones((len(facets), 1))
        degenerate = np.zeros(len(facets), dtype=bool)
    else:
        diffs = centers[facets[:, 1:]] - centers[facets[:, :1]]  # (F, d-1, d)
        # generalized cross product: cofactors of the (d-1) x d difference block
        normals = np.empty((len(facets), d))
        for i in range(d):
            minor = np.delete(diffs, i, axis=2)
            normals[:, i] = (-1) ** i * (np.linalg.det(minor) if d > 1 else 1.0)
        length = np.linalg.norm(normals, axis=1)
        volume_scale = np.prod(np.linalg.norm(diffs, axis=2), axis=1)
        degenerate = length <= AFFINE_RANK_TOL * volume_scale
        normals /= np.where(degenerate, 1.0, length)[:, None]
    offsets = np.einsum("fd,fd->f", normals, centers[facets[:, 0]])
    signed = normals @ centers.T - offsets[:, None]
    pos = np.maximum(signed.max(axis=1), 0.0)
    neg = np.maximum((-signed).max(axis=1), 0.0)
    pos[degenerate] = 0.0
    neg[degenerate] = 0.0

    table = np.zeros((L + 1, k + 1), dtype=np.int64 if comb(L, k) >= 2**31 else np.int32)
    for a in range(L + 1):
        for c in range(k + 1):
            table[a, c] = comb(a, c)
    lex_of_colex = np.empty(len(facets), dtype=table.dtype)
    lex_of_colex[_colex_rank(facets, table)] = np.arange(len(facets))

    scale = max(1.0, float(np.abs(centers).max()))
    eps = 1e-12 * scale
    lb = np.zeros(len(combos))
    for i in range(k):
        facet_cols = combos[:, [c for c in range(k) if c != i]]
        f = lex_of_colex[_colex_rank(facet_cols, table)]
        side = signed[f, combos[:, i]]
        bound = np.where(side > eps, neg[f], np.where(side < -eps, pos[f], 0.0))
        np.maximum(lb, bound, out=lb)
    lb[lb <= ZERO_DISTANCE] = 0.0
    return lb


def _max_residual(centers, subset, cutoff):
    """Max distance of all centers to the simplex on ``subset``.

    Stops early (returning a value > cutoff) once the running max exceeds
    ``cutoff``.
    """
    v = centers[list(subset)]
    k = len(v)
    system = np.vstack([np.ones(k), v.T])
    rhs = np.vstack([np.ones(len(centers)), centers.T])
    bary = np.linalg.solve(system, rhs)
    worst = bary.min(axis=0)
    outside = np.flatnonzero(worst < -1e-14)
    best = 0.0
    for j in outside[np.argsort(worst[outside])]:
        best = max(best, distance_to_simplex(centers[j], v))
        if best > cutoff:
            break
    return best


def hunt_vertices(centers, k) -> VertexHuntResult:
    """Select ``k`` of the ``L`` centers spanning the best-covering simplex.

    Minimizes ``max_j distance(center_j, simplex(subset))`` over affinely
    independent subsets; ties go to the lexicographically smallest index
    tuple.  Without any affinely independent subset, returns the canonical
    simplex ``0, e_1, ..., e_{K-1}`` with ``fallback_used=True``.
    """
    c = np.asarray(centers, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    L = len(c)
    if k < 2:
        raise ConfigError("vertex hunting needs k >= 2")
    if c.shape[1] != k - 1:
        raise ConfigError(f"centers live in R^{c.shape[1]}, expected R^{k - 1}")
    if L < k:
        raise ConfigError(f"need at least k={k} centers, got {L}")

    combos = _combinations(L, k)
    lb = _facet_bounds(c, combos, k)
    order = np.argsort(lb, kind="stable")

    # rounding slack so that ties at the optimum are still visited
    slack = 1e-12 * max(1.0, float(np.abs(c).max()))
    best_val, best_sub, evaluated = np.inf, None, 0
    for idx in order:
        if lb[idx] > best_val + slack:
            break
        sub = tuple(int(s) for s in combos[idx])
        if not affinely_independent(c[list(sub)]):
            continue
        evaluated += 1
        val = _max_residual(c, sub, best_val)
        if val < best_val or (val == best_val and sub < best_sub):
            best_val, best_sub = val, sub

    if best_sub is None:
        fallback = np.vstack([np.zeros(k - 1), np.eye(k - 1)])
        return VertexHuntResult(fallback, tuple(), float("nan"), True, evaluated)
    return VertexHuntResult(c[list(best_sub)].copy(), best_sub, float(best_val), False, evaluated)
