"""Synthetic pLSI corpora and the permutation-minimized l1 loss.

Generators follow the desk-scale simulation designs: anchor-word blocks,
pure documents, Zipf-like and two-scale word frequencies, and near-anchor
words controlled by a leakage parameter ``p_d``.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from .corpus import DocTermMatrix
from .errors import ConfigError

logger = logging.getLogger(__name__)

VARIANTS = ("basic", "zipf", "two_scale", "near_anchor_homog", "near_anchor_zipf")
BRUTE_FORCE_MAX_K = 8
ZIPF_EXPONENT = 1.07


@dataclass(frozen=True, eq=False)
class TopicModel:
    a: np.ndarray  # (p, K)
    w: np.ndarray  # (K, n)
    anchor_rows: tuple = ()  # per topic, the rows built as (near-)anchors

    def __post_init__(self):
        for name, mat in (("a", self.a), ("w", self.w)):
            if (mat < 0).any():
                raise ConfigError(f"{name} has negative entries")
            if not np.allclose(mat.sum(axis=0), 1.0, rtol=0, atol=1e-12):
                raise ConfigError(f"columns of {name} must sum to 1")
        if self.a.shape[1] != self.w.shape[0]:
            raise ConfigError("a and w disagree on K")

    @property
    def k(self):
        return self.a.shape[1]

    @property
    def d0(self):
        return self.a @ self.w

    @property
    def row_mass(self):
        return self.a.sum(axis=1)


@dataclass(frozen=True)
class SynthConfig:
    p: int = 1000
    n: int = 1000
    big_n: int = 2000
    k: int = 5
    m_p: int = 10
    delta_p: float = 0.001
    m_n: int = 10
    variant: str = "basic"
    p_s: float = 50.0
    p_d: float = 0.0
    h_max: float = 0.01
    seed: int = 0

    def validate(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if min(self.p, self.n, self.big_n, self.k) < 1:
            raise ConfigError("p, n, big_n and k must be positive")
        if self.m_p < 1:
            raise ConfigError("m_p must be at least 1 (anchor words per topic)")
        if self.m_n < 0:
            raise ConfigError("m_n must be nonnegative")
        if self.k * self.m_p >= self.p:
            raise ConfigError(f"K*m_p = {self.k * self.m_p} leaves no non-anchor words (p={self.p})")
        if self.k * self.m_n > self.n:
            raise ConfigError(f"K*m_n = {self.k * self.m_n} exceeds n={self.n}")
        if not self.delta_p > 0 or self.m_p * self.delta_p > 1.0 / self.k:
            raise ConfigError("need delta_p > 0 and m_p*delta_p <= 1/K")
        if self.variant in ("near_anchor_homog", "near_anchor_zipf") and not 0.0 <= self.p_d <= 1.0:
            raise ConfigError("p_d must lie in [0, 1]")
        if self.variant in ("zipf", "near_anchor_zipf") and not self.p_s > 0:
            raise ConfigError("p_s must be positive")
        if self.variant == "near_anchor_homog":
            rest = 1.0 - self.m_p * self.delta_p * (1 + (self.k - 1) * self.p_d)
            if rest <= 0:
                raise ConfigError("near-anchor rows leave no mass for the remaining words")
        if self.variant == "two_scale":
            if not 1.0 / self.p <= self.h_max < 1.0:
                raise ConfigError("h_max must lie in [1/p, 1)")
            n_max, n_min, h_min = self.two_scale_sizes()
            if n_max < 1 or n_min < 1 or h_min <= 0:
                raise ConfigError(f"two-scale split infeasible: n_max={n_max}, n_min={n_min}, h_min={h_min:g}")
        return self

    def two_scale_sizes(self):
        mass = 1.0 - self.m_p * self.delta_p
        n_max = int(math.floor(mass / (2.0 * self.h_max)))
        n_min = self.p - self.k * self.m_p - n_max
        h_min = (mass - self.h_max * n_max) / n_min if n_min > 0 else -1.0
        return n_max, n_min, h_min

    def replace(self, **kw):
        return SynthConfig(**{**asdict(self), **kw})


def _uniform_open(rng, size):
    # 53-bit grid shifted by half a step: strictly inside (0, 1)
    return (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) / 2.0**53


def _exponential(rng, mean):
    mean = np.asarray(mean, dtype=float)
    return -mean * np.log(_uniform_open(rng, mean.shape))


def _anchor_block(k, m_p, delta_p, leak=0.0):
    e = np.full((k, k), leak) + (1.0 - leak) * np.eye(k)
    return np.repeat(delta_p * e, m_p, axis=0)


def _fill_columns(block, mass):
    return block * (mass / block.sum(axis=0))


def _generate_a(cfg, rng):
    p, k, m_p, delta = cfg.p, cfg.k, cfg.m_p, cfg.delta_p
    n_anchor = k * m_p
    rest = p - n_anchor
    anchors = tuple(tuple(range(i * m_p, (i + 1) * m_p)) for i in range(k))
    mass = 1.0 - m_p * delta

    if cfg.variant == "basic":
        body = _fill_columns(_uniform_open(rng, (rest, k)), mass)
        return np.vstack([_anchor_block(k, m_p, delta), body]), anchors

    if cfg.variant == "near_anchor_homog":
        leak_mass = m_p * delta * (k - 1) * cfg.p_d
        body = _fill_columns(_uniform_open(rng, (rest, k)), mass - leak_mass)
        return np.vstack([_anchor_block(k, m_p, delta, cfg.p_d), body]), anchors

    if cfg.variant == "zipf":
        j = np.arange(n_anchor + 1, p + 1, dtype=float)
        means = np.repeat(((cfg.p_s + j) ** -ZIPF_EXPONENT)[:, None], k, axis=1)
        body = _fill_columns(_exponential(rng, means), mass)
        return np.vstack([_anchor_block(k, m_p, delta), body]), anchors

    if cfg.variant == "two_scale":
        n_max, n_min, h_min = cfg.two_scale_sizes()
        high = cfg.h_max * _uniform_open(rng, (n_max, k))
        low = h_min * _uniform_open(rng, (n_min, k))
        body = _fill_columns(np.vstack([high, low]), mass)
        return np.vstack([_anchor_block(k, m_p, delta), body]), anchors

    if cfg.variant == "near_anchor_zipf":
        j = np.arange(1, p + 1, dtype=float)
        means = np.repeat(((cfg.p_s + j) ** -ZIPF_EXPONENT)[:, None], k, axis=1)
        a = _exponential(rng, means)
        top = np.argmax(a, axis=1)
        chosen = []
        for topic in range(k):
            pool = np.flatnonzero(top == topic)
            if len(pool) < m_p:
                raise ConfigError(
                    f"only {len(pool)} rows have topic {topic} as their largest entry; need m_p={m_p}"
                )
            pick = np.sort(rng.choice(pool, size=m_p, replace=False))
            mask = np.arange(k) != topic
            a[np.ix_(pick, mask)] *= cfg.p_d
            chosen.append(tuple(int(x) for x in pick))
        return a / a.sum(axis=0), tuple(chosen)

    raise ConfigError(f"unknown variant {cfg.variant!r}")


def _generate_w(cfg, rng):
    k, n, m_n = cfg.k, cfg.n, cfg.m_n
    pure = np.repeat(np.eye(k), m_n, axis=1)
    mixed = _uniform_open(rng, (k, n - k * m_n))
    mixed /= mixed.sum(axis=0)
    return np.hstack([pure, mixed])


def generate_model(cfg: SynthConfig) -> TopicModel:
    """Draw ``(A, W)`` for the configured design; deterministic in ``cfg.seed``."""
    cfg.validate()
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    a, anchors = _generate_a(cfg, rng)
    w = _generate_w(cfg, rng)
    # exact unit column sums after floating-point renormalization
    return TopicModel(a=a, w=w, anchor_rows=anchors)


def sample_corpus(model: TopicModel, big_n, seed=0) -> DocTermMatrix:
    """Draw counts column by column, ``counts[:, i] ~ Multinomial(N_i, (A W)[:, i])``.

    Document ``i`` uses its own counter-based (Philox) stream keyed by
    ``(seed, i)``; numpy's multinomial draws by conditional binomials.
    """
    d0 = model.d0
    p, n = d0.shape
    lengths = np.broadcast_to(np.asarray(big_n, dtype=np.int64), (n,))
    if (lengths < 1).any():
        raise ConfigError("document lengths must be positive")
    cols = []
    for i in range(n):
        pmf = np.clip(d0[:, i], 0.0, None)
        pmf = pmf / pmf.sum()
        rng = np.random.Generator(np.random.Philox(key=[seed, i]))
        cols.append(rng.multinomial(lengths[i], pmf))
    counts = sp.csc_matrix(np.column_stack(cols))
    return DocTermMatrix(counts)


# --------------------------------------------------------------------------
# loss


@dataclass(frozen=True, eq=False)
class LossReport:
    loss: float
    permutation: tuple  # estimated topic k is matched with true topic permutation[k]
    per_topic: np.ndarray
    per_word_rel: np.ndarray | None = None


def _brute_force_perm(cost):
    k = len(cost)
    perms = np.array(list(itertools.permutations(range(k))))
    totals = cost[np.arange(k), perms].sum(axis=1)
    return tuple(int(x) for x in perms[int(np.argmin(totals))])


def _assignment_perm(cost):
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(cost), dtype=int)
    perm[rows] = cols
    return tuple(int(x) for x in perm)


def l1_loss(a_hat, a_true, method="auto") -> LossReport:
    """``min_perm sum_k ||A_hat[:, k] - A[:, perm(k)]||_1``.

    ``method`` is ``"brute"`` (all K! permutations, first minimum in
    lexicographic order), ``"assignment"`` (Hungarian-type solver) or
    ``"auto"`` (brute force up to K = 8).
    """
    a_hat = np.asarray(a_hat, dtype=float)
    a_true = np.asarray(a_true, dtype=float)
    if a_hat.shape != a_true.shape or a_hat.ndim != 2:
        raise ConfigError(f"shape mismatch: {a_hat.shape} vs {a_true.shape}")
    for name, mat in (("a_hat", a_hat), ("a_true", a_true)):
        if not np.allclose(mat.sum(axis=0), 1.0, atol=1e-6):
            logger.warning("columns of %s are not stochastic", name)
    k = a_hat.shape[1]
    cost = np.abs(a_hat[:, :, None] - a_true[:, None, :]).sum(axis=0)
    if method == "auto":
        method = "brute" if k <= BRUTE_FORCE_MAX_K else "assignment"
    if method == "brute":
        perm = _brute_force_perm(cost)
    elif method == "assignment":
        perm = _assignment_perm(cost)
    else:
        raise ConfigError(f"unknown method {method!r}")
    per_topic = cost[np.arange(k), list(perm)]
    # accumulate in true-topic order so that relabeling a_hat's columns
    # cannot change the rounding
    loss = 0.0
    for j in np.argsort(perm):
        loss += float(per_topic[j])

    aligned = np.empty_like(a_hat)
    aligned[:, list(perm)] = a_hat
    h = a_true.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(h > 0, np.abs(aligned - a_true).sum(axis=1) / h, np.nan)
    return LossReport(loss=loss, permutation=perm, per_topic=per_topic, per_word_rel=rel)


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass
class MonteCarloResult:
    rows: list  # dicts with rep, loss, wall_time_ms
    config: SynthConfig
    estimator_opts: dict = field(default_factory=dict)

    @property
    def losses(self):
        return np.array([r["loss"] for r in self.rows])

    @property
    def mean_loss(self):
        return float(self.losses.mean())

    @property
    def stderr(self):
        x = self.losses
        return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0

    def summary(self):
        return {
            "mean_loss": self.mean_loss,
            "stderr": self.stderr,
            "reps": len(self.rows),
            "config": asdict(self.config),
            "estimator": self.estimator_opts,
        }


def rep_seeds(master_seed, rep):
    """(model seed, corpus seed, fit seed) for Monte Carlo replicate ``rep``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(rep,))
    return tuple(int(s) for s in ss.generate_state(3, dtype=np.uint32))


def thread_count():
    raw = os.environ.get("TOPIC_SCORE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"TOPIC_SCORE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("TOPIC_SCORE_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def run_one(cfg: SynthConfig, rep: int, estimator_opts=None):
    from .estimator import fit

    opts = dict(estimator_opts or {})
    model_seed, corpus_seed, fit_seed = rep_seeds(cfg.seed, rep)
    start = time.perf_counter()
    model = generate_model(cfg.replace(seed=model_seed))
    corpus = sample_corpus(model, cfg.big_n, seed=corpus_seed)
    est = fit(corpus, cfg.k, seed=fit_seed, **opts)
    loss = l1_loss(est.a_hat, model.a).loss
    return {"rep": rep, "loss": loss, "wall_time_ms": (time.perf_counter() - start) * 1e3}


def run_monte_carlo(cfg: SynthConfig, reps: int, estimator_opts=None, workers=None) -> MonteCarloResult:
    """Repeat generate -> sample -> fit -> loss ``reps`` times.

    Replicate ``r`` draws everything from seeds derived from ``(cfg.seed, r)``,
    so the table does not depend on the number of workers.
    """
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    cfg.validate()
    workers = thread_count() if workers is None else max(1, workers)
    if workers == 1:
        rows = [run_one(cfg, r, estimator_opts) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: run_one(cfg, r, estimator_opts), range(reps)))
    return MonteCarloResult(rows=rows, config=cfg, estimator_opts=dict(estimator_opts or {}))
