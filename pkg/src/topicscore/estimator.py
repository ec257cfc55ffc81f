"""End-to-end Topic-SCORE fit: frequencies -> SVD -> ratios -> vertices -> A."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import DocTermMatrix, frequencies
from .errors import ConfigError, NumericalError
from .spectral import SpectralDecomposition, normalization_diag, ratio_matrix, truncated_svd
from .vertex_hunt import KMeansResult, VertexHuntResult, hunt_vertices, kmeans

COLUMN_MASS_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class TopicEstimate:
    """Result of :func:`fit`.

    ``a_hat`` and ``pi_hat`` cover every row of the input, including words
    with zero total count (listed in ``zero_rows``, reported as zero rows).
    Rows of ``ratios`` and ``spectral`` refer to the retained words only,
    in the order of ``kept_rows``.
    """

    a_hat: np.ndarray
    pi_hat: np.ndarray
    zero_rows: np.ndarray
    kept_rows: np.ndarray
    spectral: SpectralDecomposition
    vh: VertexHuntResult | None = None
    km: KMeansResult | None = None
    ratios: np.ndarray | None = None
    l_used: int = 0
    timings: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.a_hat.shape[1]


def estimate_weights(r_hat, vertices) -> np.ndarray:
    """Barycentric weights of one or many points w.r.t. the hunted vertices.

    Solves ``[1^T; V^T] w = [1; r]``, clamps negative weights to zero and
    renormalizes.  A row whose weights all clamp to zero gets the uniform
    vector.  Accepts a single point ``(K-1,)`` or a stack ``(p, K-1)``.
    """
    v = np.asarray(vertices, dtype=float)
    k = len(v)
    r = np.asarray(r_hat, dtype=float)
    single = r.ndim == 1
    r = np.atleast_2d(r)
    system = np.vstack([np.ones(k), v.T])
    rhs = np.vstack([np.ones(len(r)), r.T])
    try:
        raw = np.linalg.solve(system, rhs).T
    except np.linalg.LinAlgError:
        raise NumericalError("vertex system is singular; vertices are not affinely independent") from None
    w = np.clip(raw, 0.0, None)
    total = w.sum(axis=1)
    empty = total <= 0
    w[empty] = 1.0 / k
    total[empty] = 1.0
    w /= total[:, None]
    return w[0] if single else w


def reconstruct_topics(pi_hat, m_diag, xi1) -> np.ndarray:
    """``A* = M^{1/2} diag(xi_1) Pi``, negatives clamped, columns l1-normalized."""
    pi_hat = np.asarray(pi_hat, dtype=float)
    m_diag = np.asarray(m_diag, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    if not (len(pi_hat) == len(m_diag) == len(xi1)):
        raise ConfigError("pi_hat, m_diag and xi1 disagree on the number of words")
    a_star = (np.sqrt(m_diag) * xi1)[:, None] * pi_hat
    np.clip(a_star, 0.0, None, out=a_star)
    mass = a_star.sum(axis=0)
    if (mass < COLUMN_MASS_FLOOR).any():
        bad = np.flatnonzero(mass < COLUMN_MASS_FLOOR).tolist()
        raise NumericalError(f"estimated topic column(s) {bad} have no mass")
    return a_star / mass


def _distinct_rows(x):
    return len(np.unique(x, axis=0))


def fit_frequencies(freq, k, t=math.inf, l=None, seed=0, restarts=10, max_iter=300,
                    svd_method="auto") -> TopicEstimate:
    """Estimate the topic matrix from a ``p x n`` word-frequency matrix.

    Words (rows) with zero total frequency are dropped before the SVD and
    come back as zero rows of ``a_hat``/``pi_hat``.

    Parameters
    ----------
    freq : (p, n) array or sparse matrix
        Column-stochastic frequencies (counts divided by document length),
        or the noiseless ``A @ W``.
    k : int
        Number of topics.
    t : float
        Threshold on the eigen-ratios; ``math.inf`` disables clamping.
    l : int or "all", optional
        Number of k-means clusters; defaults to ``10 * k``.  Capped at the
        number of distinct ratio rows.  ``"all"`` makes every distinct row
        its own center, so vertex hunting runs on the raw point cloud (the
        setting in which noiseless input is recovered exactly).
    seed : int
        Seeds the randomized SVD and k-means.
    """
    timings = {}
    t0 = time.perf_counter()
    p, n = freq.shape
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    if l is None:
        l = 10 * k
    elif l == "all":
        l = p
    elif not isinstance(l, (int, np.integer)) or l < k:
        raise ConfigError(f"l must be an integer >= k={k} or 'all', got {l!r}")

    m_full = normalization_diag(freq)
    kept = np.flatnonzero(m_full > 0)
    zero_rows = np.flatnonzero(m_full <= 0)
    if len(kept) < k or n < k:
        raise ConfigError(f"k={k} exceeds min(p, n) after dropping zero rows ({len(kept)}, {n})")
    sub = freq[kept] if len(zero_rows) else freq
    m_diag = m_full[kept]

    svd_seed, km_seed = np.random.SeedSequence(seed).generate_state(2)
    sd = truncated_svd(sub, m_diag, k, seed=int(svd_seed), method=svd_method)
    timings["svd"] = time.perf_counter() - t0

    a_hat = np.zeros((p, k))
    pi_hat = np.zeros((p, k))
    if k == 1:
        a_hat[kept, 0] = m_diag / m_diag.sum()
        pi_hat[kept, 0] = 1.0
        timings["total"] = time.perf_counter() - t0
        return TopicEstimate(a_hat, pi_hat, zero_rows, kept, sd, l_used=0, timings=timings)

    rm = ratio_matrix(sd, t)
    pts = rm.rows

    t1 = time.perf_counter()
    l_used = min(l, _distinct_rows(pts))
    if l_used < k:
        raise NumericalError(f"only {l_used} distinct ratio rows; cannot hunt {k} vertices")
    # k-means++ draws depend on point order; a canonical order makes the
    # result equivariant under row permutations of the input
    canon = np.lexsort(pts.T[::-1])
    km = kmeans(pts[canon], l_used, seed=int(km_seed), restarts=restarts, max_iter=max_iter)
    assignment = np.empty_like(km.assignment)
    assignment[canon] = km.assignment
    km = KMeansResult(km.centers, assignment, km.inertia, km.n_iter, km.inertia_path)
    timings["kmeans"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    vh = hunt_vertices(km.centers, k)
    timings["vertex_hunt"] = time.perf_counter() - t2

    pi = estimate_weights(pts, vh.vertices)
    a_hat[kept] = reconstruct_topics(pi, m_diag, rm.xi1)
    pi_hat[kept] = pi
    timings["total"] = time.perf_counter() - t0
    return TopicEstimate(a_hat, pi_hat, zero_rows, kept, sd, vh=vh, km=km, ratios=pts,
                         l_used=l_used, timings=timings)


def fit(d: DocTermMatrix, k, t=math.inf, l=None, seed=0, restarts=10, max_iter=300,
        svd_method="auto") -> TopicEstimate:
    """Topic-SCORE on a corpus of word counts.  See :func:`fit_frequencies`."""
    return fit_frequencies(frequencies(d), k, t=t, l=l, seed=seed, restarts=restarts,
                           max_iter=max_iter, svd_method=svd_method)
