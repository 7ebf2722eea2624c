"""Evaluation metrics: ROC/AUC, ranking, span overlap, sentence pairs,
and alignment-order correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .align import AlignmentResult
from .errors import DegenerateCorrelationError, TextAlignError


@dataclass(frozen=True)
class LabeledScore:
    value: float
    label: bool


@dataclass(frozen=True)
class RankingTrial:
    candidate_scores: tuple[float, ...]
    true_index: int

    def __post_init__(self) -> None:
        if not 0 <= self.true_index < len(self.candidate_scores):
            raise ValueError("true_index out of range")


@dataclass(frozen=True)
class CharSpan:
    doc_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid char span [{self.start}, {self.end})")


def roc_auc(scores: Iterable[LabeledScore | tuple[float, bool]]) -> float:
    """Area under the ROC curve by the rank-sum formulation; ties count 1/2."""
    pairs = [(s.value, s.label) if isinstance(s, LabeledScore) else (s[0], bool(s[1])) for s in scores]
    pos = [v for v, lab in pairs if lab]
    neg = [v for v, lab in pairs if not lab]
    if not pos or not neg:
        raise TextAlignError("ROC needs at least one positive and one negative label")
    values = np.array([v for v, _ in pairs], dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # average rank for the tie group, 1-based
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    rank_sum_pos = sum(r for r, (_, lab) in zip(ranks, pairs) if lab)
    n_pos, n_neg = len(pos), len(neg)
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def ranking_metrics(trials: Sequence[RankingTrial]) -> dict:
    """MRR, mean/worst rank and fidelity with pessimistic tie handling.

    The true candidate's rank is 1 plus the number of candidates scoring
    strictly higher, so tying with an impostor ranks below it.
    """
    if not trials:
        raise ValueError("no ranking trials")
    ranks = []
    for trial in trials:
        true_score = trial.candidate_scores[trial.true_index]
        better = sum(1 for i, s in enumerate(trial.candidate_scores) if i != trial.true_index and s > true_score)
        ranks.append(1 + better)
    return {
        "mrr": sum(1.0 / r for r in ranks) / len(ranks),
        "mean_rank": sum(ranks) / len(ranks),
        "worst_rank": max(ranks),
        "fidelity": sum(1 for r in ranks if r == 1) / len(ranks),
    }


def _char_set(pairs: Iterable[tuple[CharSpan, CharSpan]]) -> set[tuple[str, int]]:
    chars: set[tuple[str, int]] = set()
    for src, tgt in pairs:
        for span in (src, tgt):
            for off in range(span.start, span.end):
                chars.add((span.doc_id, off))
    return chars


def _prf(n_inter: int, n_pred: int, n_gold: int) -> dict:
    precision = n_inter / n_pred if n_pred else 0.0
    recall = n_inter / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def span_prf(
    predicted: Sequence[tuple[CharSpan, CharSpan]],
    gold: Sequence[tuple[CharSpan, CharSpan]],
) -> dict:
    """Character-level micro precision/recall/F1 over span pairs.

    Every character a pair covers, in the source document and in the
    target document, enters the overlap counts.
    """
    pred_chars = _char_set(predicted)
    gold_chars = _char_set(gold)
    return _prf(len(pred_chars & gold_chars), len(pred_chars), len(gold_chars))


def sentence_pair_prf(
    predicted: Iterable[tuple[int, int]],
    gold: Iterable[tuple[int, int]],
) -> dict:
    """Set precision/recall/F1 over aligned sentence-index pairs.

    Gold entries with j = -1 mark unaligned sentences and contribute no
    positive example.
    """
    pred = {(i, j) for i, j in predicted if j >= 0}
    pos = {(i, j) for i, j in gold if j >= 0}
    return _prf(len(pred & pos), len(pred), len(pos))


def _pearson(xs: np.ndarray, ys: np.ndarray) -> float:
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sx = float(xd @ xd)
    sy = float(yd @ yd)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateCorrelationError("zero variance in span start coordinates")
    return float((xd @ yd) / math.sqrt(sx * sy))


def _ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def alignment_order_correlation(result: AlignmentResult, top_k: int = 20, method: str = "pearson") -> float:
    """Correlation of x vs y start positions over the best-scoring spans.

    High values mean the local alignments appear in the same order in both
    documents; unrelated pairs give weak or negative values.
    """
    if method not in ("pearson", "spearman"):
        raise ValueError(f"unknown correlation method: {method!r}")
    spans = sorted(result.spans, key=lambda s: -s.score)[:top_k]
    if len(spans) < 2:
        raise TextAlignError(f"need at least 2 spans for order correlation, have {len(spans)}")
    xs = np.array([s.x_start for s in spans], dtype=np.float64)
    ys = np.array([s.y_start for s in spans], dtype=np.float64)
    if method == "spearman":
        xs, ys = _ranks(xs), _ranks(ys)
    return _pearson(xs, ys)
