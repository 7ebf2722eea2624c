"""Local alignment of narrative texts with calibrated similarity scores.

Pipeline: segment two documents, score every segment pair under a chosen
similarity scorer, calibrate scores onto (-1, 1) against a background of
unrelated pairs, run local alignment with affine gap penalties, and judge
the result against a fitted extreme-value null distribution.
"""

from .align import (
    AlignmentResult,
    AlignmentSpan,
    DPState,
    GapParams,
    align_pair,
    extract_alignments,
    smith_waterman,
)
from .corpus import (
    RawDocument,
    Segment,
    SegmentationPolicy,
    SegmentedDocument,
    load_document,
    segment,
    tokenize,
)
from .errors import (
    DecodeError,
    DegenerateBackgroundError,
    DegenerateCorrelationError,
    DegenerateEmbeddingError,
    EmptyDocumentError,
    FitConvergenceError,
    InsufficientNullSampleError,
    InsufficientTextError,
    TextAlignError,
)
from .evalharness import (
    CharSpan,
    LabeledScore,
    RankingTrial,
    alignment_order_correlation,
    ranking_metrics,
    roc_auc,
    sentence_pair_prf,
    span_prf,
)
from .sigstats import GumbelParams, NullSample, fit_gumbel, p_value, sample_null_scores
from .simscore import (
    CalibrationStats,
    EmbeddingTable,
    SegmentScorer,
    SimilarityMatrix,
    WordVectorTable,
    builtin_embedding_calibration,
    build_similarity_matrix,
    calibrate,
    embedding_cosine,
    estimate_calibration,
    estimate_scorer_calibration,
    hamming_similarity,
    jaccard,
    load_embeddings,
    load_word_vectors,
    tfidf_cosine,
    wordvec_mean_cosine,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "AlignmentSpan",
    "CalibrationStats",
    "CharSpan",
    "DPState",
    "DecodeError",
    "DegenerateBackgroundError",
    "DegenerateCorrelationError",
    "DegenerateEmbeddingError",
    "EmbeddingTable",
    "EmptyDocumentError",
    "FitConvergenceError",
    "GapParams",
    "GumbelParams",
    "InsufficientNullSampleError",
    "InsufficientTextError",
    "LabeledScore",
    "NullSample",
    "RankingTrial",
    "RawDocument",
    "Segment",
    "SegmentScorer",
    "SegmentationPolicy",
    "SegmentedDocument",
    "SimilarityMatrix",
    "TextAlignError",
    "WordVectorTable",
    "align_pair",
    "alignment_order_correlation",
    "build_similarity_matrix",
    "builtin_embedding_calibration",
    "calibrate",
    "embedding_cosine",
    "estimate_calibration",
    "estimate_scorer_calibration",
    "extract_alignments",
    "fit_gumbel",
    "hamming_similarity",
    "jaccard",
    "load_document",
    "load_embeddings",
    "load_word_vectors",
    "p_value",
    "ranking_metrics",
    "roc_auc",
    "sample_null_scores",
    "segment",
    "sentence_pair_prf",
    "smith_waterman",
    "span_prf",
    "tfidf_cosine",
    "tokenize",
    "wordvec_mean_cosine",
]
