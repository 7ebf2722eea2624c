"""Local alignment of segment sequences over a calibrated similarity matrix.

The dynamic program keeps three score matrices: H for alignments ending in
a matched pair, and E/F for alignments ending inside a horizontal or
vertical gap run, which gives affine gap costs (opening a gap is charged
``gap_open``, each further step ``gap_extend``). Linear gap mode is the
special case gap_open == gap_extend. After filling the matrices, multiple
non-overlapping alignments are read out greedily from the highest-scoring
cells; each extracted alignment claims its rows and columns so later ones
cannot reuse them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import SegmentedDocument
from .errors import TextAlignError
from .simscore import CalibrationStats, SegmentScorer, SimilarityMatrix, build_similarity_matrix

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional accelerator
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

MOVE_STOP, MOVE_DIAG, MOVE_UP, MOVE_LEFT = 0, 1, 2, 3
_MOVE_NAMES = {MOVE_DIAG: "diag", MOVE_UP: "up", MOVE_LEFT: "left"}


@dataclass(frozen=True)
class GapParams:
    """Gap penalties; all values non-positive.

    In affine mode ``gap_extend`` must be no more negative than
    ``gap_open``. ``many_to_many`` admits matches that consume a segment on
    only one side, letting one segment align against several counterparts.
    """

    mode: str = "affine"
    gap: float = -1.0
    gap_open: float = -1.0
    gap_extend: float = -0.25
    many_to_many: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("linear", "affine"):
            raise ValueError(f"unknown gap mode: {self.mode!r}")
        if self.gap > 0 or self.gap_open > 0 or self.gap_extend > 0:
            raise ValueError("gap penalties must be non-positive")
        if self.mode == "affine" and self.gap_extend < self.gap_open:
            raise ValueError("gap_extend must be >= gap_open (less negative)")

    @property
    def open_extend(self) -> tuple[float, float]:
        if self.mode == "linear":
            return self.gap, self.gap
        return self.gap_open, self.gap_extend

    def to_dict(self) -> dict:
        out: dict = {"mode": self.mode, "many_to_many": self.many_to_many}
        if self.mode == "linear":
            out["gap"] = self.gap
        else:
            out["gap_open"] = self.gap_open
            out["gap_extend"] = self.gap_extend
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "GapParams":
        return cls(
            mode=d["mode"],
            gap=d.get("gap", -1.0),
            gap_open=d.get("gap_open", -1.0),
            gap_extend=d.get("gap_extend", -0.25),
            many_to_many=d.get("many_to_many", False),
        )


@dataclass
class DPState:
    H: np.ndarray
    E: np.ndarray
    F: np.ndarray
    moves: np.ndarray
    m: int
    n: int
    sim: np.ndarray
    gap: GapParams

    @property
    def max_score(self) -> float:
        return float(self.H.max())


@dataclass
class AlignmentSpan:
    """One local alignment: segments x_start..x_end of X against
    y_start..y_end of Y (all inclusive)."""

    x_start: int
    x_end: int
    y_start: int
    y_end: int
    score: float
    path: list[tuple[int, int, str]] = field(default_factory=list)

    def to_dict(self, emit_path: bool = False) -> dict:
        out = {
            "x_start": self.x_start,
            "x_end": self.x_end,
            "y_start": self.y_start,
            "y_end": self.y_end,
            "score": self.score,
        }
        if emit_path:
            out["path"] = [[i, j, mv] for i, j, mv in self.path]
        return out


@dataclass
class AlignmentResult:
    spans: list[AlignmentSpan]
    max_score: float
    m: int
    n: int
    gap: GapParams
    scorer: str

    def to_dict(self, emit_paths: bool = False) -> dict:
        return {
            "max_score": self.max_score,
            "m": self.m,
            "n": self.n,
            "scorer": self.scorer,
            "gap": self.gap.to_dict(),
            "spans": [s.to_dict(emit_paths) for s in self.spans],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlignmentResult":
        spans = [
            AlignmentSpan(
                x_start=s["x_start"], x_end=s["x_end"], y_start=s["y_start"], y_end=s["y_end"],
                score=s["score"],
                path=[(p[0], p[1], p[2]) for p in s.get("path", [])],
            )
            for s in d["spans"]
        ]
        return cls(
            spans=spans, max_score=d["max_score"], m=d["m"], n=d["n"],
            gap=GapParams.from_dict(d["gap"]), scorer=d["scorer"],
        )


@njit(cache=True)
def _sw_kernel(S, gap_open, gap_extend, many_to_many):  # pragma: no cover - exercised via smith_waterman
    m, n = S.shape
    H = np.zeros((m + 1, n + 1), dtype=np.float64)
    E = np.full((m + 1, n + 1), -np.inf, dtype=np.float64)
    F = np.full((m + 1, n + 1), -np.inf, dtype=np.float64)
    moves = np.zeros((m + 1, n + 1), dtype=np.uint8)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            s = S[i - 1, j - 1]
            e = H[i, j - 1] + gap_open
            prev_e = E[i, j - 1] + gap_extend
            if prev_e > e:
                e = prev_e
            f = H[i - 1, j] + gap_open
            prev_f = F[i - 1, j] + gap_extend
            if prev_f > f:
                f = prev_f
            E[i, j] = e
            F[i, j] = f
            diag = H[i - 1, j - 1] + s
            up = f
            left = e
            if many_to_many:
                match_up = H[i - 1, j] + s
                if match_up > up:
                    up = match_up
                match_left = H[i, j - 1] + s
                if match_left > left:
                    left = match_left
            h = diag
            if up > h:
                h = up
            if left > h:
                h = left
            if h < 0.0:
                h = 0.0
            H[i, j] = h
            if h == diag:
                moves[i, j] = 1
            elif h == up:
                moves[i, j] = 2
            elif h == left:
                moves[i, j] = 3
            else:
                moves[i, j] = 0
    return H, E, F, moves


def smith_waterman(sim: SimilarityMatrix | np.ndarray, gap: GapParams) -> DPState:
    """Fill the local-alignment DP matrices over calibrated similarities.

    Accepts either a SimilarityMatrix or a bare (m, n) score array. Move
    tags record the arg-max per cell with tie-break diag > up > left > stop.
    """
    S = sim.calibrated if isinstance(sim, SimilarityMatrix) else np.asarray(sim, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] < 1 or S.shape[1] < 1:
        raise TextAlignError(f"similarity matrix must be 2-d and non-empty, got shape {S.shape}")
    if not np.isfinite(S).all():
        bad = np.argwhere(~np.isfinite(S))[0]
        raise TextAlignError(f"non-finite similarity value at cell ({bad[0]}, {bad[1]})")
    S = np.ascontiguousarray(S, dtype=np.float64)
    gap_open, gap_extend = gap.open_extend
    H, E, F, moves = _sw_kernel(S, gap_open, gap_extend, gap.many_to_many)
    return DPState(H=H, E=E, F=F, moves=moves, m=S.shape[0], n=S.shape[1], sim=S, gap=gap)


def _backtrace(dp: DPState, i: int, j: int, claimed_rows, claimed_cols):
    """Walk move tags from DP cell (i, j) back to a zero or claimed cell.

    Returns (moves in forward order, termination cell). Gap runs follow the
    E/F chains so affine penalties stay consistent; ties prefer ending a
    run over extending it.
    """
    H, E, F, moves, S = dp.H, dp.E, dp.F, dp.moves, dp.sim
    gap_open, _ = dp.gap.open_extend
    path: list[tuple[int, int, str]] = []
    state = "H"
    while True:
        if H[i, j] == 0.0 or claimed_rows[i] or claimed_cols[j]:
            break
        if state == "H":
            tag = moves[i, j]
            if tag == MOVE_DIAG:
                path.append((i - 1, j - 1, "diag"))
                i, j = i - 1, j - 1
            elif tag == MOVE_UP:
                if H[i, j] == F[i, j]:
                    state = "F"
                else:  # many-to-many match consuming only an X segment
                    path.append((i - 1, j - 1, "up"))
                    i -= 1
            elif tag == MOVE_LEFT:
                if H[i, j] == E[i, j]:
                    state = "E"
                else:
                    path.append((i - 1, j - 1, "left"))
                    j -= 1
            else:
                break
        elif state == "F":
            opened_here = F[i, j] == H[i - 1, j] + gap_open
            path.append((i - 1, j - 1, "up"))
            i -= 1
            if opened_here:
                state = "H"
        else:  # state == "E"
            opened_here = E[i, j] == H[i, j - 1] + gap_open
            path.append((i - 1, j - 1, "left"))
            j -= 1
            if opened_here:
                state = "H"
    path.reverse()
    return path, (i, j)


def extract_alignments(dp: DPState, max_count: int = 20, min_score: float = 0.0) -> list[AlignmentSpan]:
    """Greedily read out non-overlapping local alignments, best first.

    Cells are sorted by score once; backtracing from the best unclaimed
    cell stops at a zero cell or at a row/column claimed by an earlier
    alignment, and the new alignment then claims its own rows and columns.
    The first emitted span is the optimal local alignment; later ones are
    greedy approximations.
    """
    if min_score < 0:
        raise ValueError("min_score must be non-negative")
    H = dp.H
    m, n = dp.m, dp.n
    interior = H[1:, 1:]
    order = np.argsort(-interior, axis=None, kind="stable")
    claimed_rows = np.zeros(m + 1, dtype=bool)
    claimed_cols = np.zeros(n + 1, dtype=bool)
    spans: list[AlignmentSpan] = []
    for flat in order:
        if len(spans) >= max_count:
            break
        i0 = int(flat) // n + 1
        j0 = int(flat) % n + 1
        if H[i0, j0] <= min_score:
            break
        if claimed_rows[i0] or claimed_cols[j0]:
            continue
        path, (ti, tj) = _backtrace(dp, i0, j0, claimed_rows, claimed_cols)
        score = float(H[i0, j0] - H[ti, tj])
        has_match = any(mv == "diag" for _, _, mv in path)
        if not has_match or score <= 0.0:
            continue
        claimed_rows[ti + 1 : i0 + 1] = True
        claimed_cols[tj + 1 : j0 + 1] = True
        spans.append(
            AlignmentSpan(
                x_start=ti, x_end=i0 - 1, y_start=tj, y_end=j0 - 1, score=score, path=path,
            )
        )
    return spans


def align_pair(
    doc_a: SegmentedDocument,
    doc_b: SegmentedDocument,
    scorer: SegmentScorer,
    stats: CalibrationStats,
    th_s: float = 3.0,
    gap: GapParams = GapParams(),
    max_count: int = 20,
    min_score: float = 0.0,
) -> AlignmentResult:
    """Similarity matrix -> DP -> span extraction for one document pair."""
    sim = build_similarity_matrix(doc_a, doc_b, scorer, stats, th_s)
    dp = smith_waterman(sim, gap)
    spans = extract_alignments(dp, max_count=max_count, min_score=min_score)
    spans = sorted(spans, key=lambda s: -s.score)
    return AlignmentResult(
        spans=spans, max_score=dp.max_score, m=dp.m, n=dp.n, gap=gap, scorer=scorer.kind,
    )
