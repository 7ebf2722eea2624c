from __future__ import annotations

import random

import numpy as np
import pytest

from oracles import best_local_alignment_score, best_local_alignment_score_windows, gap_run_cost
from textalign.align import (
    AlignmentResult,
    AlignmentSpan,
    GapParams,
    align_pair,
    extract_alignments,
    smith_waterman,
)
from textalign.corpus import RawDocument, SegmentationPolicy, segment
from textalign.errors import TextAlignError
from textalign.simscore import CalibrationStats, SegmentScorer

LINEAR = GapParams(mode="linear", gap=-1.0)


def random_matrix(rng: random.Random, max_m: int = 6, max_n: int = 6) -> np.ndarray:
    m = rng.randrange(1, max_m + 1)
    n = rng.randrange(1, max_n + 1)
    return np.array([[rng.uniform(-1, 1) for _ in range(n)] for _ in range(m)])


def path_score(span: AlignmentSpan, S: np.ndarray, gap: GapParams) -> float:
    """Recompute a span's score from its path: matched similarities plus
    run-aware gap costs."""
    gap_open, gap_extend = gap.open_extend
    total = 0.0
    run_move = None
    run_len = 0
    for x, y, move in span.path + [(-1, -1, "end")]:
        if move == run_move and move in ("up", "left"):
            run_len += 1
            continue
        if run_move in ("up", "left"):
            total += gap_run_cost(run_len, gap_open, gap_extend)
        run_move, run_len = move, 1
        if move == "diag":
            total += S[x, y]
            run_move = None
    return total


class TestSmithWatermanLinear:
    def test_all_negative_floors_to_zero(self):
        dp = smith_waterman(np.full((4, 5), -0.3), LINEAR)
        assert dp.max_score == 0.0
        assert (dp.H == 0).all()

    def test_two_by_two_diagonal(self):
        dp = smith_waterman(np.array([[1.0, -1.0], [-1.0, 1.0]]), LINEAR)
        assert dp.max_score == 2.0
        assert dp.H[2, 2] == 2.0

    def test_boundaries_zero(self):
        rng = random.Random(1)
        dp = smith_waterman(random_matrix(rng), LINEAR)
        assert (dp.H[0, :] == 0).all()
        assert (dp.H[:, 0] == 0).all()
        assert (dp.H >= 0).all()

    def test_oracle_equivalence(self):
        rng = random.Random(100)
        for _ in range(120):
            S = random_matrix(rng)
            dp = smith_waterman(S, LINEAR)
            expected = best_local_alignment_score(S.tolist(), -1.0, -1.0)
            assert dp.max_score == pytest.approx(expected, abs=1e-12)

    def test_window_oracle_agrees(self):
        # second, structurally different oracle on a few instances
        rng = random.Random(200)
        for _ in range(15):
            S = random_matrix(rng, 4, 4)
            dp = smith_waterman(S, LINEAR)
            expected = best_local_alignment_score_windows(S.tolist(), -1.0)
            assert dp.max_score == pytest.approx(expected, abs=1e-12)

    def test_nonstandard_gap_value(self):
        rng = random.Random(300)
        gap = GapParams(mode="linear", gap=-0.4)
        for _ in range(60):
            S = random_matrix(rng, 5, 5)
            dp = smith_waterman(S, gap)
            expected = best_local_alignment_score(S.tolist(), -0.4, -0.4)
            assert dp.max_score == pytest.approx(expected, abs=1e-12)

    def test_non_finite_rejected(self):
        S = np.array([[0.5, np.nan], [0.1, 0.2]])
        with pytest.raises(TextAlignError, match=r"\(0, 1\)"):
            smith_waterman(S, LINEAR)


class TestSmithWatermanAffine:
    def test_oracle_equivalence(self):
        rng = random.Random(400)
        for _ in range(80):
            S = random_matrix(rng, 5, 5)
            gap_open = -rng.uniform(0.3, 1.2)
            gap_extend = gap_open * rng.uniform(0.1, 1.0)
            gap = GapParams(mode="affine", gap_open=gap_open, gap_extend=gap_extend)
            dp = smith_waterman(S, gap)
            expected = best_local_alignment_score(S.tolist(), gap_open, gap_extend)
            assert dp.max_score == pytest.approx(expected, abs=1e-12)

    def test_extend_equal_open_matches_linear_everywhere(self):
        rng = random.Random(500)
        for _ in range(40):
            S = random_matrix(rng)
            g = -rng.uniform(0.2, 1.5)
            affine = smith_waterman(S, GapParams(mode="affine", gap_open=g, gap_extend=g))
            linear = smith_waterman(S, GapParams(mode="linear", gap=g))
            assert np.array_equal(affine.H, linear.H)

    def test_corner_instance_consistent_with_oracle(self):
        # two strong corners separated by a negative band: bridging needs two
        # perpendicular gap runs, so the single corner match wins
        S = np.array([[0.9, -1.0, -1.0], [-1.0, -1.0, -1.0], [-1.0, -1.0, 0.9]])
        gap = GapParams(mode="affine", gap_open=-0.5, gap_extend=-0.1)
        dp = smith_waterman(S, gap)
        assert dp.max_score == pytest.approx(
            best_local_alignment_score(S.tolist(), -0.5, -0.1), abs=1e-12
        )
        assert dp.max_score == pytest.approx(0.9, abs=1e-12)

    def test_gap_run_uses_open_then_extend(self):
        # matches at (0,0) and (0->2, y 0->1): skipping one row costs open,
        # two rows open+extend
        S = np.array([[0.9, -1.0], [-1.0, -1.0], [-1.0, 0.8]])
        gap = GapParams(mode="affine", gap_open=-0.3, gap_extend=-0.05)
        dp = smith_waterman(S, gap)
        # path: match (0,0), vertical gap over row 1, match (2,1)
        assert dp.max_score == pytest.approx(0.9 - 0.3 + 0.8, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            GapParams(mode="affine", gap_open=-0.2, gap_extend=-0.5)
        with pytest.raises(ValueError):
            GapParams(mode="linear", gap=0.5)
        with pytest.raises(ValueError):
            GapParams(mode="banded")


class TestManyToMany:
    def test_one_row_absorbs_two_columns(self):
        S = np.array([[0.9, 0.8]])
        dp = smith_waterman(S, GapParams(mode="affine", many_to_many=True))
        assert dp.max_score == pytest.approx(1.7, abs=1e-12)
        standard = smith_waterman(S, GapParams(mode="affine"))
        assert standard.max_score == pytest.approx(0.9, abs=1e-12)

    def test_never_below_standard(self):
        rng = random.Random(600)
        for _ in range(40):
            S = random_matrix(rng, 5, 5)
            base = smith_waterman(S, GapParams(mode="affine"))
            m2m = smith_waterman(S, GapParams(mode="affine", many_to_many=True))
            assert m2m.max_score >= base.max_score - 1e-15

    def test_extraction_spans_stay_disjoint(self):
        rng = random.Random(601)
        for _ in range(20):
            S = random_matrix(rng, 6, 6)
            dp = smith_waterman(S, GapParams(mode="affine", many_to_many=True))
            spans = extract_alignments(dp, max_count=10)
            rows = [i for s in spans for i in range(s.x_start, s.x_end + 1)]
            cols = [j for s in spans for j in range(s.y_start, s.y_end + 1)]
            assert len(rows) == len(set(rows))
            assert len(cols) == len(set(cols))


class TestProperties:
    def test_monotonicity_in_single_cell(self):
        rng = random.Random(700)
        for _ in range(40):
            S = random_matrix(rng, 5, 5)
            base = smith_waterman(S, LINEAR).max_score
            i = rng.randrange(S.shape[0])
            j = rng.randrange(S.shape[1])
            bumped = S.copy()
            bumped[i, j] += rng.uniform(0, 1)
            assert smith_waterman(bumped, LINEAR).max_score >= base - 1e-15

    def test_scale_invariance(self):
        rng = random.Random(800)
        for _ in range(30):
            S = random_matrix(rng, 5, 5)
            c = rng.uniform(0.5, 4.0)
            gap = GapParams(mode="affine", gap_open=-0.8, gap_extend=-0.2)
            scaled_gap = GapParams(mode="affine", gap_open=-0.8 * c, gap_extend=-0.2 * c)
            dp = smith_waterman(S, gap)
            dps = smith_waterman(S * c, scaled_gap)
            assert dps.max_score == pytest.approx(c * dp.max_score, rel=1e-12, abs=1e-12)
            spans = extract_alignments(dp, 10)
            spans_scaled = extract_alignments(dps, 10)
            assert [(s.x_start, s.x_end, s.y_start, s.y_end) for s in spans] == [
                (s.x_start, s.x_end, s.y_start, s.y_end) for s in spans_scaled
            ]

    def test_path_score_additivity(self):
        rng = random.Random(900)
        for _ in range(40):
            S = random_matrix(rng)
            gap = GapParams(mode="affine", gap_open=-0.7, gap_extend=-0.15)
            dp = smith_waterman(S, gap)
            for span in extract_alignments(dp, 8):
                assert span.score == pytest.approx(path_score(span, S, gap), abs=1e-9)

    def test_path_score_additivity_linear(self):
        rng = random.Random(901)
        for _ in range(40):
            S = random_matrix(rng)
            dp = smith_waterman(S, LINEAR)
            for span in extract_alignments(dp, 8):
                assert span.score == pytest.approx(path_score(span, S, LINEAR), abs=1e-9)


class TestExtraction:
    def test_all_zero_yields_nothing(self):
        dp = smith_waterman(np.full((3, 3), -1.0), LINEAR)
        assert extract_alignments(dp, 5) == []

    def test_two_by_two_single_span(self):
        dp = smith_waterman(np.array([[1.0, -1.0], [-1.0, 1.0]]), LINEAR)
        spans = extract_alignments(dp, 5)
        assert len(spans) == 1
        span = spans[0]
        assert (span.x_start, span.x_end, span.y_start, span.y_end) == (0, 1, 0, 1)
        assert span.score == 2.0
        assert [m for _, _, m in span.path] == ["diag", "diag"]

    def block_matrix(self):
        """Two planted diagonal blocks; the separating band is wide enough
        that bridging them can never pay off."""
        S = np.full((9, 9), -0.9)
        for i in range(3):
            S[i, i] = 0.8  # block one: rows 0-2, cols 0-2
        for i in range(6, 9):
            S[i, i] = 0.6  # block two: rows 6-8, cols 6-8
        return S

    def test_block_diagonal_recovery(self):
        dp = smith_waterman(self.block_matrix(), LINEAR)
        spans = extract_alignments(dp, 5)
        assert len(spans) == 2
        first, second = spans
        assert (first.x_start, first.x_end, first.y_start, first.y_end) == (0, 2, 0, 2)
        assert (second.x_start, second.x_end, second.y_start, second.y_end) == (6, 8, 6, 8)
        assert first.score == pytest.approx(2.4, abs=1e-12)
        assert second.score == pytest.approx(1.8, abs=1e-12)
        assert first.score >= second.score
        assert first.score == dp.max_score

    def test_max_count_limits_output(self):
        dp = smith_waterman(self.block_matrix(), LINEAR)
        spans = extract_alignments(dp, 1)
        assert len(spans) == 1

    def test_min_score_filters_weak_blocks(self):
        dp = smith_waterman(self.block_matrix(), LINEAR)
        spans = extract_alignments(dp, 5, min_score=2.0)
        assert len(spans) == 1
        assert spans[0].score == pytest.approx(2.4, abs=1e-12)

    def test_disjoint_rows_and_columns(self):
        rng = random.Random(1000)
        for _ in range(30):
            S = random_matrix(rng)
            dp = smith_waterman(S, LINEAR)
            spans = extract_alignments(dp, 10)
            rows = [i for s in spans for i in range(s.x_start, s.x_end + 1)]
            cols = [j for s in spans for j in range(s.y_start, s.y_end + 1)]
            assert len(rows) == len(set(rows))
            assert len(cols) == len(set(cols))
            for s in spans:
                assert s.score > 0
                assert s.x_start <= s.x_end
                assert s.y_start <= s.y_end

    def test_first_span_is_optimal(self):
        rng = random.Random(1100)
        for _ in range(30):
            S = random_matrix(rng)
            dp = smith_waterman(S, LINEAR)
            spans = extract_alignments(dp, 10)
            if dp.max_score > 0:
                assert spans
                assert spans[0].score == pytest.approx(dp.max_score, abs=1e-12)
            else:
                assert spans == []


def toy_pair(text_a: str, text_b: str):
    pol = SegmentationPolicy(unit="sentence")
    doc_a = segment(RawDocument("a", text_a), pol)
    doc_b = segment(RawDocument("b", text_b), pol)
    return doc_a, doc_b


class TestAlignPair:
    def stats(self):
        return CalibrationStats(scorer="jaccard", mu=0.1, sigma=0.1, sample_count=100)

    def test_self_alignment_covers_diagonal(self):
        text = "The cat sat down. A dog ran away. Birds fly south. Fish swim deep."
        doc_a, doc_b = toy_pair(text, text)
        result = align_pair(doc_a, doc_b, SegmentScorer("jaccard"), self.stats(), gap=LINEAR)
        assert len(result.spans) >= 1
        top = result.spans[0]
        assert (top.x_start, top.x_end, top.y_start, top.y_end) == (0, 3, 0, 3)
        # max score is the sum of the diagonal calibrated scores
        from textalign.simscore import calibrate

        expected = 4 * calibrate(1.0, self.stats(), 3.0)
        assert result.max_score == pytest.approx(expected, abs=1e-9)

    def test_disjoint_docs_empty(self):
        doc_a, doc_b = toy_pair("Completely unique words here.", "Other different tokens appear.")
        result = align_pair(doc_a, doc_b, SegmentScorer("jaccard"), self.stats(), gap=LINEAR)
        assert result.max_score == 0.0
        assert result.spans == []

    def test_reversed_doc_yields_antidiagonal_pieces(self):
        sentences = [
            "The red fox jumped high.",
            "A silver fish swam past.",
            "Green turtles crawl slowly.",
            "Brown owls hoot loudly.",
        ]
        doc_a, doc_b = toy_pair(" ".join(sentences), " ".join(reversed(sentences)))
        result = align_pair(doc_a, doc_b, SegmentScorer("jaccard"), self.stats(), gap=LINEAR)
        assert len(result.spans) == 4
        for s in result.spans:
            assert s.score > 0
            assert s.x_start == s.x_end
            assert s.y_start == s.y_end
            assert s.y_start == 3 - s.x_start

    def test_result_sorted_and_serializable(self):
        doc_a, doc_b = toy_pair(
            "The cat sat down. A dog ran away. Birds fly south.",
            "The cat sat down. Unrelated middle words. Birds fly south.",
        )
        result = align_pair(doc_a, doc_b, SegmentScorer("jaccard"), self.stats(), gap=LINEAR)
        scores = [s.score for s in result.spans]
        assert scores == sorted(scores, reverse=True)
        d = result.to_dict()
        round_tripped = AlignmentResult.from_dict(d)
        assert round_tripped.max_score == result.max_score
        assert len(round_tripped.spans) == len(result.spans)
        assert round_tripped.gap == result.gap
