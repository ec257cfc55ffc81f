"""Normalized SVD of the frequency matrix and entry-wise eigen-ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, NumericalError

DENSE_LIMIT = 10**6
GAP_TOL = 1e-12
RESIDUAL_TOL = 1e-8
SUBSPACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Top-``k`` singular triplets of ``diag(m_diag)^{-1/2} @ freq``.

    ``next_singular_value`` is the (k+1)-th singular value when it exists
    (used for the eigen-gap check and scree output), otherwise ``nan``.
    """

    m_diag: np.ndarray
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    next_singular_value: float = math.nan
    method: str = "dense"
    n_iter: int = 0

    @property
    def k(self) -> int:
        return len(self.singular_values)

    @property
    def xi1(self) -> np.ndarray:
        return self.left_vectors[:, 0]


@dataclass(frozen=True, eq=False)
class RatioMatrix:
    rows: np.ndarray  # (p, K-1)
    xi1: np.ndarray
    threshold: float
    degenerate_rows: np.ndarray  # indices with xi1 == 0


def normalization_diag(freq) -> np.ndarray:
    """Row means of the frequency matrix: ``M(j, j) = mean_i D(j, i)``."""
    if sp.issparse(freq):
        return np.asarray(freq.mean(axis=1)).ravel()
    return np.asarray(freq, dtype=float).mean(axis=1)


def _scaled(freq, m_diag):
    scale = 1.0 / np.sqrt(m_diag)
    if sp.issparse(freq):
        return sp.csr_matrix(sp.diags(scale) @ freq)
    return np.asarray(freq, dtype=float) * scale[:, None]


def _orth(y):
    q, _ = np.linalg.qr(y)
    return q


def _rayleigh_ritz(b, q):
    # b ~ q q^T b; SVD of the small projected matrix
    small = np.asarray((b.T @ q).T)
    u_small, s, vt = np.linalg.svd(small, full_matrices=False)
    return q @ u_small, s, vt.T


def _residuals(b, u, s, v, k):
    bv = np.asarray(b @ v[:, :k])
    btu = np.asarray(b.T @ u[:, :k])
    r1 = np.linalg.norm(bv - u[:, :k] * s[:k], axis=0)
    r2 = np.linalg.norm(btu - v[:, :k] * s[:k], axis=0)
    return np.maximum(r1, r2)


def _randomized_svd(b, k, rng, oversample, power_iters, max_power_iters):
    """Randomized subspace iteration with Rayleigh-Ritz extraction.

    Runs ``power_iters`` sweeps, then keeps sweeping until every one of the
    top ``k`` Ritz triplets has residual <= RESIDUAL_TOL * sigma_1 and
    residual <= SUBSPACE_TOL * (sigma_k - sigma_{k+1}), which bounds the angle
    of the computed subspace.  At the sweep budget only the first condition
    is required.
    """
    p, n = b.shape
    width = min(k + 1 + oversample, min(p, n))
    omega = rng.standard_normal((n, width))
    q = _orth(np.asarray(b @ omega))
    sweeps = 0
    while True:
        for _ in range(power_iters if sweeps == 0 else 1):
            z = _orth(np.asarray(b.T @ q))
            q = _orth(np.asarray(b @ z))
            sweeps += 1
        u, s, v = _rayleigh_ritz(b, q)
        res = _residuals(b, u, s, v, k)
        small = s[0] == 0 or res.max() <= RESIDUAL_TOL * s[0]
        if small and (res.max() <= SUBSPACE_TOL * (s[k - 1] - s[k]) or sweeps >= max_power_iters):
            return u, s, v, sweeps
        if sweeps >= max_power_iters:
            raise NumericalError(
                f"randomized SVD did not converge in {sweeps} sweeps "
                f"(max residual {res.max() / s[0]:.2e} * sigma_1)"
            )


def _fix_signs(u, v):
    # largest-|entry| positive for every column (first index on ties) ...
    idx = np.argmax(np.abs(u), axis=0)
    flip = np.sign(u[idx, np.arange(u.shape[1])])
    flip[flip == 0] = 1.0
    # ... except the leading vector, whose entry sum is made positive
    total = u[:, 0].sum()
    if total != 0:
        flip[0] = np.sign(total)
    return u * flip, v * flip


def truncated_svd(freq, m_diag, k, seed=0, method="auto", oversample=10, power_iters=6,
                  max_power_iters=300) -> SpectralDecomposition:
    """Leading ``k`` singular triplets of ``diag(m_diag)^{-1/2} @ freq``.

    Parameters
    ----------
    freq : (p, n) dense array or sparse matrix
    m_diag : (p,) positive vector
    k : int
    seed : int
        Seeds the Gaussian test matrix of the randomized method.
    method : {"auto", "dense", "randomized"}
        ``"auto"`` uses a dense LAPACK SVD when ``p * n <= 10**6`` and
        randomized subspace iteration otherwise.

    Raises
    ------
    NumericalError
        When two consecutive singular values among the first ``k + 1`` are
        within ``1e-12 * sigma_1`` of each other, or the iteration fails to
        converge.
    """
    p, n = freq.shape
    m_diag = np.asarray(m_diag, dtype=float)
    if m_diag.shape != (p,):
        raise ConfigError(f"m_diag has shape {m_diag.shape}, expected ({p},)")
    if not 1 <= k <= min(p, n):
        raise ConfigError(f"k={k} must lie in 1..min(p, n)={min(p, n)}")
    if (m_diag <= 0).any():
        raise ConfigError("normalization diagonal has nonpositive entries; remove zero-count words first")
    if method == "auto":
        method = "dense" if p * n <= DENSE_LIMIT else "randomized"

    b = _scaled(freq, m_diag)
    sweeps = 0
    if method == "dense":
        dense = b.toarray() if sp.issparse(b) else b
        u, s, vt = np.linalg.svd(dense, full_matrices=False)
        v = vt.T
    elif method == "randomized":
        rng = np.random.default_rng(seed)
        u, s, v, sweeps = _randomized_svd(b, k, rng, oversample, power_iters, max_power_iters)
    else:
        raise ConfigError(f"unknown SVD method {method!r}")

    nxt = float(s[k]) if len(s) > k else math.nan
    gaps = np.diff(s[: k + 1]) * -1
    if s[0] <= 0:
        raise NumericalError("matrix is zero")
    if (gaps <= GAP_TOL * s[0]).any():
        j = int(np.argmax(gaps <= GAP_TOL * s[0])) + 1
        raise NumericalError(
            f"singular values {j} and {j + 1} are tied within {GAP_TOL:g} * sigma_1; "
            "the leading singular subspace is not well defined"
        )
    u, v = _fix_signs(u[:, :k], v[:, :k])
    return SpectralDecomposition(
        m_diag=m_diag,
        singular_values=s[:k].copy(),
        left_vectors=np.ascontiguousarray(u),
        right_vectors=np.ascontiguousarray(v),
        next_singular_value=nxt,
        method=method,
        n_iter=sweeps,
    )


def ratio_matrix(sd: SpectralDecomposition, t=math.inf) -> RatioMatrix:
    """Entry-wise ratios ``xi_{k+1}(j) / xi_1(j)`` clamped to ``[-t, t]``.

    Rows where ``xi_1(j) == 0`` exactly are set to zero and reported in
    ``degenerate_rows``.
    """
    if sd.k < 2:
        raise ConfigError("the ratio matrix needs K >= 2")
    if not t > 0:
        raise ConfigError("threshold t must be positive")
    xi = sd.left_vectors
    xi1 = xi[:, 0].copy()
    degenerate = np.flatnonzero(xi1 == 0)
    safe = np.where(xi1 == 0, 1.0, xi1)
    rows = xi[:, 1:] / safe[:, None]
    rows[degenerate] = 0.0
    if math.isfinite(t):
        rows = np.clip(rows, -t, t)
    return RatioMatrix(rows=rows, xi1=xi1, threshold=float(t), degenerate_rows=degenerate)
