"""Command-line interface for the alignment pipeline.

Subcommands: segment, align, calibrate, fit-null, pvalue, heatmap, report,
and eval (roc | rank | pan | fables). All outputs are canonical JSON (or
fixed binary/text formats), so identical inputs and seeds give
byte-identical files. Exit codes: 0 success, 1 runtime error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .align import AlignmentResult, GapParams, extract_alignments, smith_waterman
from .corpus import SegmentationPolicy, SegmentedDocument, load_document, segment
from .errors import TextAlignError
from .evalharness import CharSpan, RankingTrial, ranking_metrics, roc_auc, sentence_pair_prf, span_prf
from .jsonio import canonical_json, dump_json, load_json
from .render import (
    alignment_figure,
    background_figure,
    null_fit_figure,
    render_report_html,
    render_report_tsv,
    render_svg,
    write_pgm,
)
from .sigstats import GumbelParams, fit_gumbel, p_value, sample_null_scores
from .simscore import (
    CalibrationStats,
    SegmentScorer,
    SimilarityMatrix,
    build_similarity_matrix,
    builtin_embedding_calibration,
    calibration_from_scores,
    load_embeddings,
    load_word_vectors,
    sample_background_scores,
)

SCORER_ALIASES = {
    "jaccard": "jaccard",
    "tfidf": "tfidf_cosine",
    "tfidf_cosine": "tfidf_cosine",
    "wordvec": "wordvec_mean_cosine",
    "wordvec_mean_cosine": "wordvec_mean_cosine",
    "embedding": "embedding_cosine",
    "embedding_cosine": "embedding_cosine",
    "hamming": "hamming",
}


class UsageError(Exception):
    """Bad invocation discovered after argument parsing; exits 2."""


@dataclass
class RunConfig:
    """Resolved pipeline settings for one command invocation."""

    scorer: str = "jaccard"
    policy: SegmentationPolicy = field(default_factory=SegmentationPolicy)
    th_s: float = 3.0
    gap: GapParams = field(default_factory=GapParams)
    max_alignments: int = 20
    min_span_score: float = 0.0
    calibration: str = "auto"
    calibration_pairs: int = 1000
    seed: int = 0
    word_vectors_path: str | None = None
    embeddings_path: str | None = None


def _add_policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--unit", choices=["sentence", "paragraph", "fixed_chunk", "equal_chunks"],
                   default="paragraph", help="segmentation unit (default paragraph)")
    p.add_argument("--words-per-chunk", type=int, default=None, help="chunk size for fixed_chunk")
    p.add_argument("--chunk-count", type=int, default=None, help="chunk count for equal_chunks")
    p.add_argument("--min-words", type=int, default=None,
                   help="merge segments shorter than this many tokens (default: 0, paragraphs 5)")


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    _add_policy_args(p)
    p.add_argument("--scorer", choices=sorted(SCORER_ALIASES), default="jaccard")
    p.add_argument("--th-s", type=float, default=3.0, dest="th_s",
                   help="z-score where calibrated similarity crosses zero (default 3.0)")
    p.add_argument("--gap-mode", choices=["affine", "linear"], default="affine")
    p.add_argument("--gap", type=float, default=-1.0, help="linear gap penalty (default -1.0)")
    p.add_argument("--gap-open", type=float, default=-1.0, help="affine gap open penalty (default -1.0)")
    p.add_argument("--gap-extend", type=float, default=-0.25, help="affine gap extend penalty (default -0.25)")
    p.add_argument("--many-to-many", action="store_true",
                   help="let one segment align against several counterparts")
    p.add_argument("--max-alignments", type=int, default=20)
    p.add_argument("--min-span-score", type=float, default=0.0)
    p.add_argument("--calibration", default=None,
                   help="'auto' (sample from the inputs), 'builtin' (embedding default), or a stats JSON path")
    p.add_argument("--calibration-pairs", type=int, default=1000,
                   help="background pairs sampled for auto calibration (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word-vectors", default=None, help="word-vector table for the wordvec scorer")
    p.add_argument("--embeddings", default=None, help="embedding file for the embedding scorer")


def _policy_from_args(args) -> SegmentationPolicy:
    try:
        return SegmentationPolicy(
            unit=args.unit,
            words_per_chunk=args.words_per_chunk,
            chunk_count=args.chunk_count,
            min_words=args.min_words,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _config_from_args(args) -> RunConfig:
    kind = SCORER_ALIASES[args.scorer]
    calibration = args.calibration
    if calibration is None:
        calibration = "builtin" if kind == "embedding_cosine" else "auto"
    if calibration == "builtin" and kind != "embedding_cosine":
        raise UsageError("builtin calibration exists only for the embedding scorer")
    try:
        gap = GapParams(
            mode=args.gap_mode,
            gap=args.gap,
            gap_open=args.gap_open,
            gap_extend=args.gap_extend,
            many_to_many=args.many_to_many,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(
        scorer=kind,
        policy=_policy_from_args(args),
        th_s=args.th_s,
        gap=gap,
        max_alignments=args.max_alignments,
        min_span_score=args.min_span_score,
        calibration=calibration,
        calibration_pairs=args.calibration_pairs,
        seed=args.seed,
        word_vectors_path=args.word_vectors,
        embeddings_path=args.embeddings,
    )


def _doc_id(path: Path, taken: set[str] | None = None) -> str:
    stem = path.stem
    if taken is None or stem not in taken:
        return stem
    k = 2
    while f"{stem}#{k}" in taken:
        k += 1
    return f"{stem}#{k}"


def _load_tables(cfg: RunConfig):
    word_vectors = None
    embeddings = None
    if cfg.scorer == "wordvec_mean_cosine":
        if cfg.word_vectors_path is None:
            raise UsageError("--word-vectors is required with the wordvec scorer")
        word_vectors = load_word_vectors(cfg.word_vectors_path)
    if cfg.scorer == "embedding_cosine":
        if cfg.embeddings_path is None:
            raise UsageError("--embeddings is required with the embedding scorer")
        if not Path(cfg.embeddings_path).exists():
            raise TextAlignError(f"embedding file not found: {cfg.embeddings_path}")
        embeddings = load_embeddings(cfg.embeddings_path)
    return word_vectors, embeddings


def _make_scorer(cfg: RunConfig, docs, word_vectors, embeddings) -> SegmentScorer:
    return SegmentScorer(cfg.scorer, docs=docs, word_vectors=word_vectors, embeddings=embeddings)


def _resolve_calibration(cfg: RunConfig, docs, word_vectors, embeddings,
                         collect_scores: bool = False):
    """CalibrationStats per cfg.calibration; optionally the sampled scores."""
    if cfg.calibration == "builtin":
        return (builtin_embedding_calibration(), None) if collect_scores else builtin_embedding_calibration()
    if cfg.calibration == "auto":
        scorer = _make_scorer(cfg, docs, word_vectors, embeddings)
        pool = [(doc.doc_id, seg) for doc in docs for seg in doc.segments]
        scores = sample_background_scores(
            lambda a, b: scorer(a[0], a[1], b[0], b[1]), pool, cfg.calibration_pairs, cfg.seed
        )
        stats = calibration_from_scores(scores, scorer=cfg.scorer)
        return (stats, scores) if collect_scores else stats
    stats = CalibrationStats.from_dict(load_json(cfg.calibration))
    return (stats, None) if collect_scores else stats


def _segment_file(path: str | Path, policy: SegmentationPolicy, doc_id: str | None = None) -> SegmentedDocument:
    p = Path(path)
    if not p.exists():
        raise TextAlignError(f"input file not found: {p}")
    doc = load_document(p, doc_id or _doc_id(p))
    return segment(doc, policy)


def _align_documents(cfg: RunConfig, doc_a: SegmentedDocument, doc_b: SegmentedDocument,
                     word_vectors, embeddings, stats: CalibrationStats):
    scorer = _make_scorer(cfg, (doc_a, doc_b), word_vectors, embeddings)
    sim = build_similarity_matrix(doc_a, doc_b, scorer, stats, cfg.th_s)
    dp = smith_waterman(sim, cfg.gap)
    spans = extract_alignments(dp, max_count=cfg.max_alignments, min_score=cfg.min_span_score)
    spans = sorted(spans, key=lambda s: -s.score)
    result = AlignmentResult(spans=spans, max_score=dp.max_score, m=dp.m, n=dp.n,
                             gap=cfg.gap, scorer=cfg.scorer)
    return result, sim


def cmd_segment(args) -> int:
    policy = _policy_from_args(args)
    doc = _segment_file(args.input, policy, doc_id=args.id)
    dump_json(doc.to_dict(), args.out)
    return 0


def cmd_align(args) -> int:
    cfg = _config_from_args(args)
    doc_a = _segment_file(args.doc_a, cfg.policy)
    id_b = _doc_id(Path(args.doc_b))
    if id_b == _doc_id(Path(args.doc_a)) and Path(args.doc_a).resolve() != Path(args.doc_b).resolve():
        id_b = _doc_id(Path(args.doc_b), taken={id_b})
    doc_b = _segment_file(args.doc_b, cfg.policy, doc_id=id_b)
    word_vectors, embeddings = _load_tables(cfg)
    stats = _resolve_calibration(cfg, (doc_a, doc_b), word_vectors, embeddings)
    result, sim = _align_documents(cfg, doc_a, doc_b, word_vectors, embeddings, stats)

    out = result.to_dict(emit_paths=args.emit_paths)
    out["doc_a"] = doc_a.doc_id
    out["doc_b"] = doc_b.doc_id
    out["policy"] = cfg.policy.to_dict()
    if args.gumbel:
        params = GumbelParams.from_dict(load_json(args.gumbel))
        m = result.m if args.pair_lengths else None
        n = result.n if args.pair_lengths else None
        for span, span_dict in zip(sorted(result.spans, key=lambda s: -s.score), out["spans"]):
            span_dict["p_value"] = p_value(span.score, params, m, n)
        out["max_score_p_value"] = p_value(result.max_score, params, m, n)
    dump_json(out, args.out)
    if args.matrix_out:
        dump_json(sim.to_dict(), args.matrix_out)
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config_from_args(args)
    docs = _load_corpus_dir(args.corpus, cfg.policy)
    word_vectors, embeddings = _load_tables(cfg)
    cfg.calibration = "auto"
    cfg.calibration_pairs = args.num_pairs
    stats, scores = _resolve_calibration(cfg, docs, word_vectors, embeddings, collect_scores=True)
    dump_json(stats.to_dict(), args.out)
    if args.figure:
        background_figure(scores, stats, args.figure)
    return 0


def _load_corpus_dir(corpus_dir: str, policy: SegmentationPolicy) -> list[SegmentedDocument]:
    root = Path(corpus_dir)
    if not root.is_dir():
        raise UsageError(f"corpus directory not found: {root}")
    paths = sorted(root.glob("*.txt"))
    if not paths:
        raise TextAlignError(f"no .txt files in {root}")
    docs = []
    taken: set[str] = set()
    for p in paths:
        doc_id = _doc_id(p, taken)
        taken.add(doc_id)
        docs.append(_segment_file(p, policy, doc_id=doc_id))
    return docs


def cmd_fit_null(args) -> int:
    cfg = _config_from_args(args)
    docs = _load_corpus_dir(args.corpus, cfg.policy)
    word_vectors, embeddings = _load_tables(cfg)
    stats = _resolve_calibration(cfg, docs, word_vectors, embeddings)
    sample = sample_null_scores(
        docs, cfg.scorer, stats, cfg.th_s, cfg.gap, args.num_pairs, cfg.seed,
        word_vectors=word_vectors, embeddings=embeddings,
    )
    params = fit_gumbel(sample)
    dump_json(params.to_dict(), args.out)
    if args.figure:
        null_fit_figure(sample.scores, params, args.figure)
    return 0


def cmd_pvalue(args) -> int:
    params = GumbelParams.from_dict(load_json(args.params))
    p = p_value(args.score, params, args.m, args.n)
    sys.stdout.write(format(p, ".17g") + "\n")
    return 0


def cmd_heatmap(args) -> int:
    matrix = SimilarityMatrix.from_dict(load_json(args.matrix))
    if args.format == "pgm":
        write_pgm(matrix, args.out)
        return 0
    spans = ()
    if args.alignment:
        spans = AlignmentResult.from_dict(load_json(args.alignment)).spans
    Path(args.out).write_text(render_svg(matrix, spans), encoding="utf-8")
    return 0


def cmd_report(args) -> int:
    data = load_json(args.alignment)
    result = AlignmentResult.from_dict(data)
    if "policy" not in data:
        raise TextAlignError(f"{args.alignment}: missing segmentation policy; produce it with 'align'")
    policy = SegmentationPolicy.from_dict(data["policy"])
    doc_a = _segment_file(args.doc_a, policy, doc_id=data.get("doc_a"))
    doc_b = _segment_file(args.doc_b, policy, doc_id=data.get("doc_b"))
    if len(doc_a.segments) != result.m or len(doc_b.segments) != result.n:
        raise TextAlignError(
            "document segmentation does not match the alignment "
            f"({len(doc_a.segments)}x{len(doc_b.segments)} vs {result.m}x{result.n})"
        )
    ordered = sorted(result.spans, key=lambda s: -s.score)
    p_values = None
    span_dicts = sorted(data["spans"], key=lambda s: -s["score"])
    if span_dicts and all("p_value" in s for s in span_dicts):
        p_values = [s["p_value"] for s in span_dicts]
    max_p = data.get("max_score_p_value")

    out = Path(args.out)
    out.write_text(render_report_html(result, doc_a, doc_b, p_values, max_p), encoding="utf-8")
    tsv_path = Path(args.tsv) if args.tsv else out.with_suffix(".tsv")
    tsv_path.write_text(render_report_tsv(result, doc_a, doc_b, p_values), encoding="utf-8")
    if not args.no_figure:
        figure_path = Path(args.figure) if args.figure else out.with_suffix(".png")
        alignment_figure(result, figure_path,
                         title=f"{doc_a.doc_id} vs {doc_b.doc_id} ({len(ordered)} alignments)")
    return 0


def _read_manifest(path: str) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"manifest not found: {p}")
    records = []
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise TextAlignError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
    if not records:
        raise TextAlignError(f"{p}: empty manifest")
    return records


def _emit(obj, out_path: str | None) -> None:
    text = canonical_json(obj)
    sys.stdout.write(text + "\n")
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")


def cmd_eval_roc(args) -> int:
    cfg = _config_from_args(args)
    records = _read_manifest(args.manifest)
    base = Path(args.manifest).parent
    word_vectors, embeddings = _load_tables(cfg)
    cache: dict[str, SegmentedDocument] = {}
    taken: set[str] = set()

    def get_doc(rel: str) -> SegmentedDocument:
        if rel not in cache:
            p = base / rel
            doc_id = _doc_id(p, taken)
            taken.add(doc_id)
            cache[rel] = _segment_file(p, cfg.policy, doc_id=doc_id)
        return cache[rel]

    pairs = [(get_doc(r["doc_a"]), get_doc(r["doc_b"]), bool(r["label"])) for r in records]
    stats = _resolve_calibration(cfg, list(cache.values()), word_vectors, embeddings)
    labeled = []
    for doc_a, doc_b, label in pairs:
        result, _ = _align_documents(cfg, doc_a, doc_b, word_vectors, embeddings, stats)
        labeled.append((result.max_score, label))
    _emit({"auc": roc_auc(labeled), "pairs": len(labeled)}, args.out)
    return 0


def cmd_eval_rank(args) -> int:
    cfg = _config_from_args(args)
    records = _read_manifest(args.manifest)
    base = Path(args.manifest).parent
    word_vectors, embeddings = _load_tables(cfg)

    def candidate_policy(summary: SegmentedDocument) -> SegmentationPolicy:
        if not args.candidate_unit:
            return cfg.policy
        chunk_count = args.chunk_count
        if args.candidate_unit == "equal_chunks" and chunk_count is None:
            # match each candidate's resolution to the summary length
            chunk_count = len(summary.segments)
        try:
            return SegmentationPolicy(
                unit=args.candidate_unit,
                words_per_chunk=args.words_per_chunk,
                chunk_count=chunk_count,
                min_words=args.min_words,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    trials = []
    for rec in records:
        summary = _segment_file(base / rec["summary"], cfg.policy)
        pol = candidate_policy(summary)
        candidates = [_segment_file(base / cand, pol) for cand in rec["candidates"]]
        stats = _resolve_calibration(cfg, [summary] + candidates, word_vectors, embeddings)
        scores = []
        for cand in candidates:
            result, _ = _align_documents(cfg, summary, cand, word_vectors, embeddings, stats)
            scores.append(result.max_score)
        trials.append(RankingTrial(candidate_scores=tuple(scores), true_index=rec["true_index"]))
    _emit({"trials": len(trials), **ranking_metrics(trials)}, args.out)
    return 0


def _read_span_pairs(path: str) -> list[tuple[CharSpan, CharSpan]]:
    pairs = []
    for rec in _read_manifest(path):
        pairs.append(
            (
                CharSpan(rec["src_doc"], rec["src_start"], rec["src_end"]),
                CharSpan(rec["tgt_doc"], rec["tgt_start"], rec["tgt_end"]),
            )
        )
    return pairs


def cmd_eval_pan(args) -> int:
    predicted = _read_span_pairs(args.pred)
    gold = _read_span_pairs(args.gold)
    _emit(span_prf(predicted, gold), args.out)
    return 0


def cmd_eval_fables(args) -> int:
    for path in (args.pred, args.gold):
        if not Path(path).exists():
            raise UsageError(f"pair file not found: {path}")
    pred = [(p[0], p[1]) for p in load_json(args.pred)["pairs"]]
    gold = [(p[0], p[1]) for p in load_json(args.gold)["pairs"]]
    _emit(sentence_pair_prf(pred, gold), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textalign",
        description="Find and score local alignments between pairs of narrative texts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a text file to JSON")
    p.add_argument("input")
    p.add_argument("--id", default=None, help="document id (default: file stem)")
    p.add_argument("--out", required=True)
    _add_policy_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("align", help="align two text files")
    p.add_argument("doc_a")
    p.add_argument("doc_b")
    p.add_argument("--out", required=True)
    p.add_argument("--matrix-out", default=None, help="also write the similarity matrix JSON")
    p.add_argument("--emit-paths", action="store_true", help="include per-span move paths")
    p.add_argument("--gumbel", default=None, help="Gumbel params JSON; annotate scores with p-values")
    p.add_argument("--pair-lengths", action="store_true",
                   help="use this pair's segment counts in p-values instead of the fit's reference lengths")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("calibrate", help="estimate background calibration stats over a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--num-pairs", type=int, default=1000)
    p.add_argument("--figure", default=None, help="also plot the background histogram and normal fit")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fit-null", help="fit the null score distribution over a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--num-pairs", type=int, default=1000, help="document pairs to align (default 1000)")
    p.add_argument("--figure", default=None, help="also plot the null histogram and fitted density")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_fit_null)

    p = sub.add_parser("pvalue", help="p-value of an alignment score under fitted params")
    p.add_argument("score", type=float)
    p.add_argument("--params", required=True, help="Gumbel params JSON from fit-null")
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--n", type=float, default=None)
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser("heatmap", help="render a similarity matrix as PGM or SVG")
    p.add_argument("--matrix", required=True, help="similarity matrix JSON (from align --matrix-out)")
    p.add_argument("--alignment", default=None, help="alignment JSON; outlines spans (SVG only)")
    p.add_argument("--format", required=True, choices=["pgm", "svg"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="HTML report of aligned excerpts, with TSV and figure alongside")
    p.add_argument("--alignment", required=True, help="alignment JSON from align")
    p.add_argument("--doc-a", required=True)
    p.add_argument("--doc-b", required=True)
    p.add_argument("--out", required=True, help="HTML output path")
    p.add_argument("--tsv", default=None, help="span table path (default: output with .tsv)")
    p.add_argument("--figure", default=None, help="figure path (default: output with .png)")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("eval", help="evaluation protocols")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("roc", help="relatedness AUC over labeled document pairs")
    e.add_argument("--manifest", required=True, help="JSONL: {doc_a, doc_b, label}")
    e.add_argument("--out", default=None)
    _add_pipeline_args(e)
    e.set_defaults(func=cmd_eval_roc)

    e = esub.add_parser("rank", help="candidate ranking metrics (MRR, fidelity)")
    e.add_argument("--manifest", required=True, help="JSONL: {summary, candidates, true_index}")
    e.add_argument("--candidate-unit", default=None,
                   choices=["sentence", "paragraph", "fixed_chunk", "equal_chunks"],
                   help="segment candidates differently; equal_chunks without --chunk-count "
                        "matches each candidate to the summary's segment count")
    e.add_argument("--out", default=None)
    _add_pipeline_args(e)
    e.set_defaults(func=cmd_eval_rank)

    e = esub.add_parser("pan", help="character-level span precision/recall/F1")
    e.add_argument("--pred", required=True, help="JSONL: {src_doc, src_start, src_end, tgt_doc, ...}")
    e.add_argument("--gold", required=True)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval_pan)

    e = esub.add_parser("fables", help="sentence-pair precision/recall/F1")
    e.add_argument("--pred", required=True, help='JSON: {"pairs": [[i, j], ...]}, j = -1 for unaligned')
    e.add_argument("--gold", required=True)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval_fables)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TextAlignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
