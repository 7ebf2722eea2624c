"""Segment-pair similarity scorers and score calibration.

Five scorer families (token-overlap, tf-idf cosine, mean word-vector
cosine, precomputed embedding cosine, positional word containment) produce
raw scores on incompatible scales. A background sample of unrelated
segment pairs supplies a mean and standard deviation per scorer, and the
calibration transform maps every raw score onto (-1, 1) so that pairs
below a z-score threshold come out negative.
"""

from __future__ import annotations

import math
import random
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .corpus import Segment, SegmentedDocument
from .errors import DegenerateBackgroundError, DegenerateEmbeddingError, TextAlignError

SCORER_KINDS = ("jaccard", "tfidf_cosine", "wordvec_mean_cosine", "embedding_cosine", "hamming")

# Background fit of embedding cosine similarity over random unrelated
# paragraph pairs; used when no calibration is supplied for that scorer.
BUILTIN_EMBEDDING_CALIBRATION_MU = 0.097
BUILTIN_EMBEDDING_CALIBRATION_SIGMA = 0.099

DEFAULT_Z_THRESHOLD = 3.0

EMBEDDING_MAGIC = b"GNATEMB1"
EMBEDDING_FORMAT_VERSION = 1

_CAL_LO = math.nextafter(-1.0, 0.0)
_CAL_HI = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class CalibrationStats:
    scorer: str
    mu: float
    sigma: float
    sample_count: int

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.sample_count < 2:
            raise ValueError("sample_count must be at least 2")

    def to_dict(self) -> dict:
        return {"scorer": self.scorer, "mu": self.mu, "sigma": self.sigma, "sample_count": self.sample_count}

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationStats":
        return cls(scorer=d["scorer"], mu=d["mu"], sigma=d["sigma"], sample_count=d["sample_count"])


def builtin_embedding_calibration() -> CalibrationStats:
    return CalibrationStats(
        scorer="embedding_cosine",
        mu=BUILTIN_EMBEDDING_CALIBRATION_MU,
        sigma=BUILTIN_EMBEDDING_CALIBRATION_SIGMA,
        sample_count=100_000_000,
    )


@dataclass
class WordVectorTable:
    dim: int
    vectors: dict[str, np.ndarray]


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[tuple[str, int], np.ndarray]
    normalized: bool = True

    def get(self, doc_id: str, index: int) -> np.ndarray:
        key = (doc_id, index)
        if key not in self.vectors:
            raise TextAlignError(f"no embedding for segment {index} of document {doc_id!r}")
        return self.vectors[key]


def load_word_vectors(path: str | Path) -> WordVectorTable:
    """Read a plain-text table: one `token v1 v2 ... vdim` line per token."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise TextAlignError(f"{path}:{lineno}: no vector components")
            elif len(values) != dim:
                raise TextAlignError(f"{path}:{lineno}: expected {dim} components, got {len(values)}")
            vectors[token] = np.array([float(v) for v in values], dtype=np.float64)
    if dim is None:
        raise TextAlignError(f"{path}: empty word-vector file")
    return WordVectorTable(dim=dim, vectors=vectors)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the binary embedding file format (magic GNATEMB1, little-endian).

    Header: 8 magic bytes, u32 version, u32 dim, u32 record count. Record:
    u32 doc-id byte length, UTF-8 doc id, u32 segment index, dim float32.
    Every vector must arrive L2-normalized to within 1e-4.
    """
    data = Path(path).read_bytes()
    if len(data) < 20 or data[:8] != EMBEDDING_MAGIC:
        raise TextAlignError(f"{path}: not an embedding file (bad magic)")
    version, dim, count = struct.unpack_from("<III", data, 8)
    if version != EMBEDDING_FORMAT_VERSION:
        raise TextAlignError(f"{path}: unsupported embedding format version {version}")
    if dim < 1:
        raise TextAlignError(f"{path}: invalid dimension {dim}")
    vectors: dict[tuple[str, int], np.ndarray] = {}
    off = 20
    for _ in range(count):
        if off + 4 > len(data):
            raise TextAlignError(f"{path}: truncated record header at byte {off}")
        (idlen,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + idlen + 4 + 4 * dim > len(data):
            raise TextAlignError(f"{path}: truncated record at byte {off}")
        doc_id = data[off : off + idlen].decode("utf-8")
        off += idlen
        (seg_index,) = struct.unpack_from("<I", data, off)
        off += 4
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).copy()
        off += 4 * dim
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > 1e-4:
            raise TextAlignError(
                f"{path}: vector for ({doc_id!r}, {seg_index}) has L2 norm {norm:.6f}, expected 1"
            )
        vectors[(doc_id, seg_index)] = vec
    return EmbeddingTable(dim=dim, vectors=vectors, normalized=True)


def _cosine(dot_ab: float, dot_aa: float, dot_bb: float) -> float:
    if dot_aa == 0.0 or dot_bb == 0.0:
        return 0.0
    value = dot_ab / math.sqrt(dot_aa * dot_bb)
    return min(1.0, max(-1.0, value))


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Multiset overlap: per-token min counts over per-token max counts."""
    ca, cb = Counter(a), Counter(b)
    union = sum((ca | cb).values())
    if union == 0:
        return 0.0
    inter = sum((ca & cb).values())
    return inter / union


class DocumentFrequency:
    """Per-token segment counts over the segments being aligned."""

    def __init__(self, segments_tokens: Iterable[Sequence[str]]):
        self.df: Counter[str] = Counter()
        self.n_segments = 0
        for tokens in segments_tokens:
            self.n_segments += 1
            self.df.update(set(tokens))

    @classmethod
    def from_documents(cls, docs: Iterable[SegmentedDocument]) -> "DocumentFrequency":
        return cls(seg.tokens for doc in docs for seg in doc.segments)

    def idf(self, token: str) -> float:
        return math.log((1 + self.n_segments) / (1 + self.df[token])) + 1.0

    def weight_vector(self, tokens: Sequence[str]) -> dict[str, float]:
        tf = Counter(tokens)
        return {tok: count * self.idf(tok) for tok, count in tf.items()}


def tfidf_cosine(seg_a: Segment, seg_b: Segment, df: DocumentFrequency) -> float:
    wa = df.weight_vector(seg_a.tokens)
    wb = df.weight_vector(seg_b.tokens)
    # fixed summation order keeps the score exactly symmetric
    dot = sum(wa[t] * wb[t] for t in sorted(wa.keys() & wb.keys()))
    norm_a = sum(wa[t] * wa[t] for t in sorted(wa))
    norm_b = sum(wb[t] * wb[t] for t in sorted(wb))
    return _cosine(dot, norm_a, norm_b)


def _mean_vector(tokens: Sequence[str], table: WordVectorTable) -> np.ndarray | None:
    hits = [table.vectors[t] for t in tokens if t in table.vectors]
    if not hits:
        return None
    return np.mean(np.stack(hits), axis=0)


def wordvec_mean_cosine(seg_a: Segment, seg_b: Segment, table: WordVectorTable) -> float:
    """Cosine of the unweighted means of in-vocabulary token vectors.

    A segment with no in-vocabulary tokens scores 0 against anything.
    """
    va = _mean_vector(seg_a.tokens, table)
    vb = _mean_vector(seg_b.tokens, table)
    if va is None or vb is None:
        return 0.0
    return _cosine(float(va @ vb), float(va @ va), float(vb @ vb))


def embedding_cosine(vec_a: np.ndarray, vec_b: np.ndarray) -> float:
    a = np.asarray(vec_a, dtype=np.float64)
    b = np.asarray(vec_b, dtype=np.float64)
    if a.shape != b.shape:
        raise TextAlignError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    dot_aa = float(a @ a)
    dot_bb = float(b @ b)
    if dot_aa == 0.0 or dot_bb == 0.0:
        raise DegenerateEmbeddingError("cannot take cosine of a zero embedding")
    return _cosine(float(a @ b), dot_aa, dot_bb)


def hamming_similarity(tokens_a: Sequence[str], tokens_b: Sequence[str]) -> float:
    """Containment of the shorter token list in equal chunks of the longer.

    The longer list is cut into one chunk per word of the shorter; the
    score is the fraction of chunks containing the corresponding word.
    Argument order does not matter.
    """
    shorter, longer = (tokens_a, tokens_b) if len(tokens_a) <= len(tokens_b) else (tokens_b, tokens_a)
    m, n = len(shorter), len(longer)
    if m == 0:
        raise TextAlignError("hamming similarity needs at least one token on each side")
    hits = 0
    for i in range(m):
        lo = i * n // m
        hi = (i + 1) * n // m
        if shorter[i] in longer[lo:hi]:
            hits += 1
    return hits / m


class SegmentScorer:
    """Raw similarity of two segments under one scorer family.

    tfidf_cosine derives its document-frequency table from all segments of
    the documents passed at construction; embedding_cosine looks vectors up
    by (doc id, segment index).
    """

    def __init__(
        self,
        kind: str,
        docs: Sequence[SegmentedDocument] = (),
        word_vectors: WordVectorTable | None = None,
        embeddings: EmbeddingTable | None = None,
    ):
        if kind not in SCORER_KINDS:
            raise ValueError(f"unknown scorer kind: {kind!r}")
        self.kind = kind
        self._df = DocumentFrequency.from_documents(docs) if kind == "tfidf_cosine" else None
        self._word_vectors = word_vectors
        self._embeddings = embeddings
        if kind == "wordvec_mean_cosine" and word_vectors is None:
            raise TextAlignError("wordvec_mean_cosine requires a word-vector table")
        if kind == "embedding_cosine" and embeddings is None:
            raise TextAlignError("embedding_cosine requires an embedding table")

    def __call__(self, doc_id_a: str, seg_a: Segment, doc_id_b: str, seg_b: Segment) -> float:
        if self.kind == "jaccard":
            return jaccard(seg_a.tokens, seg_b.tokens)
        if self.kind == "tfidf_cosine":
            return tfidf_cosine(seg_a, seg_b, self._df)
        if self.kind == "wordvec_mean_cosine":
            return wordvec_mean_cosine(seg_a, seg_b, self._word_vectors)
        if self.kind == "hamming":
            return hamming_similarity(seg_a.tokens, seg_b.tokens)
        return embedding_cosine(
            self._embeddings.get(doc_id_a, seg_a.index), self._embeddings.get(doc_id_b, seg_b.index)
        )


def sample_background_scores(
    score_fn: Callable[[Any, Any], float],
    pool: Sequence[Any],
    num_pairs: int,
    seed: int,
) -> np.ndarray:
    """Score ``num_pairs`` random distinct-index pairs drawn from ``pool``.

    Sampling is with replacement over unordered distinct pairs, driven by a
    generator seeded with ``seed``, so results are reproducible.
    """
    if len(pool) < 2:
        raise ValueError("calibration pool needs at least 2 items")
    if num_pairs < 2:
        raise ValueError("num_pairs must be at least 2")
    rng = random.Random(seed)
    n = len(pool)
    scores = np.empty(num_pairs, dtype=np.float64)
    for k in range(num_pairs):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        scores[k] = score_fn(pool[i], pool[j])
    return scores


def calibration_from_scores(scores: np.ndarray, scorer: str = "custom") -> CalibrationStats:
    """Bessel-corrected mean/stddev of a background score sample."""
    scores = np.asarray(scores, dtype=np.float64)
    sigma = float(scores.std(ddof=1))
    if sigma == 0.0:
        raise DegenerateBackgroundError("all sampled background scores are identical")
    return CalibrationStats(scorer=scorer, mu=float(scores.mean()), sigma=sigma, sample_count=len(scores))


def estimate_calibration(
    score_fn: Callable[[Any, Any], float],
    pool: Sequence[Any],
    num_pairs: int,
    seed: int,
    scorer: str = "custom",
) -> CalibrationStats:
    """Sample a seeded background of unrelated pairs and fit mean/stddev.

    Raises DegenerateBackgroundError when every sampled score is identical.
    """
    return calibration_from_scores(sample_background_scores(score_fn, pool, num_pairs, seed), scorer=scorer)


def estimate_scorer_calibration(
    scorer: SegmentScorer,
    docs: Sequence[SegmentedDocument],
    num_pairs: int,
    seed: int,
) -> CalibrationStats:
    """Calibrate ``scorer`` over the pooled segments of ``docs``."""
    pool = [(doc.doc_id, seg) for doc in docs for seg in doc.segments]
    return estimate_calibration(
        lambda a, b: scorer(a[0], a[1], b[0], b[1]), pool, num_pairs, seed, scorer=scorer.kind
    )


def calibrate_array(raw: np.ndarray, stats: CalibrationStats, th_s: float) -> np.ndarray:
    """Vectorized calibration transform; see :func:`calibrate`."""
    z = (np.asarray(raw, dtype=np.float64) - stats.mu) / stats.sigma
    # tanh(t/2) is the logistic transform rescaled onto (-1, 1).
    out = np.tanh((z - th_s) / 2.0)
    return np.clip(out, _CAL_LO, _CAL_HI)


def calibrate(raw: float, stats: CalibrationStats, th_s: float = DEFAULT_Z_THRESHOLD) -> float:
    """Map a raw score onto (-1, 1) via its background z-score.

    Computes 2*sigmoid(Z - th_s) - 1 where Z = (raw - mu)/sigma, so the
    output is strictly increasing in ``raw``, crosses zero exactly at
    Z = th_s, and stays strictly inside the open interval.
    """
    return float(calibrate_array(np.array([raw]), stats, th_s)[0])


@dataclass
class SimilarityMatrix:
    m: int
    n: int
    raw: np.ndarray
    calibrated: np.ndarray
    th_s: float
    stats: CalibrationStats

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "raw": self.raw.tolist(),
            "calibrated": self.calibrated.tolist(),
            "th_s": self.th_s,
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimilarityMatrix":
        raw = np.array(d["raw"], dtype=np.float64).reshape(d["m"], d["n"])
        cal = np.array(d["calibrated"], dtype=np.float64).reshape(d["m"], d["n"])
        return cls(
            m=d["m"], n=d["n"], raw=raw, calibrated=cal, th_s=d["th_s"],
            stats=CalibrationStats.from_dict(d["stats"]),
        )


def build_similarity_matrix(
    doc_a: SegmentedDocument,
    doc_b: SegmentedDocument,
    scorer: SegmentScorer,
    stats: CalibrationStats,
    th_s: float = DEFAULT_Z_THRESHOLD,
) -> SimilarityMatrix:
    """Score every segment pair of the two documents and calibrate."""
    m, n = len(doc_a.segments), len(doc_b.segments)
    raw = np.empty((m, n), dtype=np.float64)
    for i, seg_a in enumerate(doc_a.segments):
        for j, seg_b in enumerate(doc_b.segments):
            try:
                raw[i, j] = scorer(doc_a.doc_id, seg_a, doc_b.doc_id, seg_b)
            except TextAlignError as exc:
                raise TextAlignError(f"scoring cell ({i}, {j}): {exc}") from exc
    calibrated = calibrate_array(raw, stats, th_s)
    return SimilarityMatrix(m=m, n=n, raw=raw, calibrated=calibrated, th_s=th_s, stats=stats)
