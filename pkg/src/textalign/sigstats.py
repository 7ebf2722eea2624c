"""Null-distribution fitting and p-values for alignment scores.

Maximum alignment scores between unrelated documents follow an extreme
value (Gumbel) distribution. Fitting its location and scale by maximum
likelihood over a sample of unrelated-pair scores turns any alignment
score into the probability that two unrelated documents of comparable
lengths would align at least as well by chance.
"""

from __future__ import annotations

import math
import os
import random
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .align import GapParams, align_pair
from .corpus import SegmentedDocument
from .errors import FitConvergenceError, InsufficientNullSampleError
from .simscore import CalibrationStats, EmbeddingTable, SegmentScorer, WordVectorTable

_MIN_NORMAL = 1e-300
_MIN_POSITIVE = 5e-324  # smallest positive subnormal double


@dataclass(frozen=True)
class GumbelParams:
    """Gumbel location/scale plus the equivalent (K, lambda) form.

    lambda = 1/beta and K = exp(lambda*mu)/(m_ref*n_ref), where m_ref and
    n_ref are the reference sequence lengths the fit was performed at.
    """

    mu: float
    beta: float
    lam: float
    K: float
    m_ref: float
    n_ref: float
    sample_count: int = 0
    excluded_zero_pairs: int = 0

    def pdf(self, x: float) -> float:
        z = (x - self.mu) / self.beta
        return math.exp(-(z + math.exp(-z))) / self.beta

    def cdf(self, x: float) -> float:
        z = (x - self.mu) / self.beta
        return math.exp(-math.exp(-z))

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "beta": self.beta,
            "lambda": self.lam,
            "K": self.K,
            "m_ref": self.m_ref,
            "n_ref": self.n_ref,
            "sample_count": self.sample_count,
            "excluded_zero_pairs": self.excluded_zero_pairs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GumbelParams":
        return cls(
            mu=d["mu"], beta=d["beta"], lam=d["lambda"], K=d["K"],
            m_ref=d["m_ref"], n_ref=d["n_ref"],
            sample_count=d.get("sample_count", 0),
            excluded_zero_pairs=d.get("excluded_zero_pairs", 0),
        )

    @classmethod
    def from_location_scale(
        cls, mu: float, beta: float, m_ref: float, n_ref: float,
        sample_count: int = 0, excluded_zero_pairs: int = 0,
    ) -> "GumbelParams":
        lam = 1.0 / beta
        K = math.exp(lam * mu) / (m_ref * n_ref)
        return cls(
            mu=mu, beta=beta, lam=lam, K=K, m_ref=m_ref, n_ref=n_ref,
            sample_count=sample_count, excluded_zero_pairs=excluded_zero_pairs,
        )


@dataclass
class NullSample:
    scores: np.ndarray
    mean_m: float
    mean_n: float
    excluded_zero_pairs: int = 0


def _align_max_score(args) -> float:
    doc_a, doc_b, kind, stats, th_s, gap, word_vectors, embeddings = args
    scorer = SegmentScorer(kind, docs=(doc_a, doc_b), word_vectors=word_vectors, embeddings=embeddings)
    result = align_pair(doc_a, doc_b, scorer, stats, th_s=th_s, gap=gap, max_count=1)
    return result.max_score


def worker_count() -> int:
    """Worker cap from the GNAT_THREADS environment variable (default 1)."""
    value = os.environ.get("GNAT_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def sample_null_scores(
    corpus: Sequence[SegmentedDocument],
    kind: str,
    stats: CalibrationStats,
    th_s: float,
    gap: GapParams,
    num_pairs: int,
    seed: int,
    word_vectors: WordVectorTable | None = None,
    embeddings: EmbeddingTable | None = None,
) -> NullSample:
    """Align random distinct document pairs and record their max scores.

    Pairs with no alignment at all (max score 0) are excluded from the
    sample but counted. The caller is responsible for the corpus actually
    being unrelated (e.g. one book per author).
    """
    if len(corpus) < 2:
        raise ValueError("null sampling needs at least 2 documents")
    all_pairs = list(combinations(range(len(corpus)), 2))
    if num_pairs < len(all_pairs):
        chosen = random.Random(seed).sample(all_pairs, num_pairs)
    else:
        chosen = all_pairs
    tasks = [
        (corpus[i], corpus[j], kind, stats, th_s, gap, word_vectors, embeddings)
        for i, j in chosen
    ]
    workers = worker_count()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw_scores = list(pool.map(_align_max_score, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        raw_scores = [_align_max_score(t) for t in tasks]
    scores = np.array([s for s in raw_scores if s > 0.0], dtype=np.float64)
    excluded = len(raw_scores) - len(scores)
    if len(scores) < 2:
        raise InsufficientNullSampleError(
            f"only {len(scores)} of {len(raw_scores)} sampled pairs aligned at all"
        )
    seg_counts = [len(doc.segments) for doc in corpus]
    mean_len = float(np.mean(seg_counts))
    return NullSample(scores=scores, mean_m=mean_len, mean_n=mean_len, excluded_zero_pairs=excluded)


def fit_gumbel(sample: NullSample, tol: float = 1e-9, max_iter: int = 200) -> GumbelParams:
    """Maximum-likelihood Gumbel fit of the null score sample.

    Solves the scale fixed-point equation
    beta = mean(x) - sum(x*exp(-x/beta))/sum(exp(-x/beta)) by Newton
    iteration from the moment estimate beta0 = stddev*sqrt(6)/pi, then
    mu = -beta*log(mean(exp(-x/beta))).
    """
    x = np.asarray(sample.scores, dtype=np.float64)
    if len(x) < 2:
        raise InsufficientNullSampleError("need at least 2 scores to fit")
    if len(x) < 100:
        warnings.warn(f"fitting Gumbel parameters from only {len(x)} scores", stacklevel=2)
    xbar = float(x.mean())
    std = float(x.std(ddof=1))
    if std == 0.0:
        raise FitConvergenceError("all scores identical; scale parameter is degenerate")
    shift = float(x.min())
    xs = x - shift
    beta = std * math.sqrt(6.0) / math.pi
    trace = []
    for iteration in range(max_iter):
        w = np.exp(-xs / beta)
        sw = float(w.sum())
        ew_x = float((x * w).sum()) / sw
        ew_x2 = float((x * x * w).sum()) / sw
        g = beta - xbar + ew_x
        gprime = 1.0 + max(ew_x2 - ew_x * ew_x, 0.0) / (beta * beta)
        step = g / gprime
        new_beta = beta - step
        if new_beta <= 0.0:
            new_beta = beta / 2.0
        trace.append((iteration, beta, abs(new_beta - beta)))
        converged = abs(new_beta - beta) <= tol
        beta = new_beta
        if converged:
            break
    else:
        tail = ", ".join(f"iter {i}: beta={b:.6g} |step|={d:.3g}" for i, b, d in trace[-3:])
        raise FitConvergenceError(f"scale fit did not converge in {max_iter} iterations ({tail})")
    mu = shift - beta * math.log(float(np.exp(-xs / beta).mean()))
    return GumbelParams.from_location_scale(
        mu=mu, beta=beta, m_ref=sample.mean_m, n_ref=sample.mean_n,
        sample_count=len(x), excluded_zero_pairs=sample.excluded_zero_pairs,
    )


def p_value(score: float, params: GumbelParams, m: float | None = None, n: float | None = None) -> float:
    """Probability of an alignment score at least this high by chance.

    p = 1 - exp(-K*m*n*exp(-lambda*score)), evaluated in log space;
    first-order expansion below 1e-300 keeps extreme scores meaningful.
    ``m``/``n`` default to the fit's reference lengths.
    """
    m = params.m_ref if m is None else m
    n = params.n_ref if n is None else n
    if m <= 0 or n <= 0:
        raise ValueError("sequence lengths must be positive")
    log_q = (
        params.lam * params.mu
        + math.log(m) + math.log(n)
        - math.log(params.m_ref) - math.log(params.n_ref)
        - params.lam * score
    )
    if log_q < math.log(_MIN_NORMAL):
        p = math.exp(log_q)
        return p if p > 0.0 else _MIN_POSITIVE
    q = math.exp(log_q)
    return -math.expm1(-q)
