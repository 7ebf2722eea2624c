"""Heatmap, report, and figure rendering for alignment results."""

from __future__ import annotations

import html
from pathlib import Path
from typing import Sequence

import numpy as np

from .align import AlignmentResult, AlignmentSpan
from .corpus import SegmentedDocument
from .sigstats import GumbelParams
from .simscore import CalibrationStats, SimilarityMatrix

_SPAN_COLORS = ("#ffd54f", "#aed581", "#4fc3f7", "#f48fb1", "#ce93d8", "#ffab91", "#80cbc4", "#e6ee9c")


def heatmap_pixels(calibrated: np.ndarray) -> np.ndarray:
    """Map calibrated scores in (-1, 1) linearly onto 0..255 gray levels."""
    levels = np.rint(255.0 * (np.asarray(calibrated, dtype=np.float64) + 1.0) / 2.0)
    return np.clip(levels, 0, 255).astype(np.uint8)


def write_pgm(matrix: SimilarityMatrix, path: str | Path) -> None:
    """Binary PGM (P5): width = n, height = m, row i = X segment i."""
    pixels = heatmap_pixels(matrix.calibrated)
    header = f"P5\n{matrix.n} {matrix.m}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def render_svg(matrix: SimilarityMatrix, spans: Sequence[AlignmentSpan] = (), cell: int = 10) -> str:
    """One rect per cell on the gray scale of write_pgm, plus span outlines."""
    pixels = heatmap_pixels(matrix.calibrated)
    width, height = matrix.n * cell, matrix.m * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for i in range(matrix.m):
        for j in range(matrix.n):
            p = int(pixels[i, j])
            parts.append(
                f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({p},{p},{p})"/>'
            )
    for k, span in enumerate(spans):
        x = span.y_start * cell
        y = span.x_start * cell
        w = (span.y_end - span.y_start + 1) * cell
        h = (span.x_end - span.x_start + 1) * cell
        color = _SPAN_COLORS[k % len(_SPAN_COLORS)]
        parts.append(
            f'<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="none" '
            f'stroke="{color}" stroke-width="2"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _segment_range_text(doc: SegmentedDocument, start: int, end: int) -> str:
    return " ".join(doc.segments[i].text for i in range(start, end + 1))


def _flat(text: str) -> str:
    return " ".join(text.split())


def render_report_html(
    result: AlignmentResult,
    doc_a: SegmentedDocument,
    doc_b: SegmentedDocument,
    p_values: Sequence[float] | None = None,
    max_score_p: float | None = None,
) -> str:
    """Side-by-side aligned excerpts, one color class per span, best first."""
    spans = sorted(result.spans, key=lambda s: -s.score)
    head = (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>Alignment: {html.escape(doc_a.doc_id)} vs {html.escape(doc_b.doc_id)}</title>\n"
        "<style>\n"
        "body{font-family:Georgia,serif;margin:2em auto;max-width:70em;}\n"
        ".cols{display:flex;gap:1em;}\n"
        ".col{flex:1;padding:0.6em;border-radius:4px;}\n"
        "section{margin-bottom:1.2em;}\n"
        "h2{font-size:1em;font-family:sans-serif;}\n"
        + "".join(
            f".c{k} .col{{background:{color};}}\n" for k, color in enumerate(_SPAN_COLORS)
        )
        + "</style>\n</head>\n<body>\n"
    )
    meta = (
        f"<h1>Alignment report</h1>\n"
        f"<p>{html.escape(doc_a.doc_id)} ({result.m} segments) vs "
        f"{html.escape(doc_b.doc_id)} ({result.n} segments), scorer {html.escape(result.scorer)}, "
        f"max score {result.max_score:.4f}"
        + (f", p-value {max_score_p:.3g}" if max_score_p is not None else "")
        + "</p>\n"
    )
    if not spans:
        body = "<p class=\"empty\">No significant alignments.</p>\n"
    else:
        sections = []
        for k, span in enumerate(spans):
            pv = ""
            if p_values is not None:
                pv = f", p-value {p_values[k]:.3g}"
            sections.append(
                f"<section class=\"span c{k % len(_SPAN_COLORS)}\">\n"
                f"<h2>#{k + 1} score {span.score:.4f}{pv} &mdash; "
                f"X[{span.x_start}&ndash;{span.x_end}] &harr; Y[{span.y_start}&ndash;{span.y_end}]</h2>\n"
                "<div class=\"cols\">\n"
                f"<div class=\"col\">{html.escape(_segment_range_text(doc_a, span.x_start, span.x_end))}</div>\n"
                f"<div class=\"col\">{html.escape(_segment_range_text(doc_b, span.y_start, span.y_end))}</div>\n"
                "</div>\n</section>"
            )
        body = "\n".join(sections) + "\n"
    return head + meta + body + "</body>\n</html>\n"


def render_report_tsv(
    result: AlignmentResult,
    doc_a: SegmentedDocument,
    doc_b: SegmentedDocument,
    p_values: Sequence[float] | None = None,
) -> str:
    """Tab-delimited span table, one row per span, best first."""
    spans = sorted(result.spans, key=lambda s: -s.score)
    rows = ["rank\tscore\tp_value\tx_start\tx_end\ty_start\ty_end\tx_text\ty_text"]
    for k, span in enumerate(spans):
        pv = format(p_values[k], ".17g") if p_values is not None else ""
        rows.append(
            "\t".join(
                [
                    str(k + 1),
                    format(span.score, ".17g"),
                    pv,
                    str(span.x_start),
                    str(span.x_end),
                    str(span.y_start),
                    str(span.y_end),
                    _flat(_segment_range_text(doc_a, span.x_start, span.x_end)),
                    _flat(_segment_range_text(doc_b, span.y_start, span.y_end)),
                ]
            )
        )
    return "\n".join(rows) + "\n"


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def alignment_figure(result: AlignmentResult, path: str | Path, title: str | None = None) -> None:
    """Span layout drawn as rectangles on the (Y index, X index) plane."""
    plt = _pyplot()
    height = min(max(6 * max(1, result.m) / max(1, result.n), 2.0), 12.0)
    fig, ax = plt.subplots(figsize=(6, height))
    for k, span in enumerate(sorted(result.spans, key=lambda s: -s.score)):
        color = _SPAN_COLORS[k % len(_SPAN_COLORS)]
        rect = plt.Rectangle(
            (span.y_start - 0.5, span.x_start - 0.5),
            span.y_end - span.y_start + 1,
            span.x_end - span.x_start + 1,
            facecolor=color,
            edgecolor="black",
            linewidth=0.8,
        )
        ax.add_patch(rect)
    ax.set_xlim(-0.5, result.n - 0.5)
    ax.set_ylim(result.m - 0.5, -0.5)
    ax.set_xlabel("Y segment index")
    ax.set_ylabel("X segment index")
    ax.set_title(title or f"{len(result.spans)} local alignments, max score {result.max_score:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def null_fit_figure(scores: np.ndarray, params: GumbelParams, path: str | Path) -> None:
    """Histogram of null alignment scores with the fitted density curve."""
    plt = _pyplot()
    scores = np.asarray(scores, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(scores, bins=min(80, max(10, len(scores) // 50)), density=True, color="#90caf9", label="null scores")
    xs = np.linspace(scores.min(), scores.max(), 400)
    ax.plot(xs, [params.pdf(v) for v in xs], color="crimson",
            label=f"fit: location {params.mu:.3f}, scale {params.beta:.3f}")
    ax.set_xlabel("max alignment score")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def background_figure(scores: np.ndarray, stats: CalibrationStats, path: str | Path) -> None:
    """Histogram of background similarity scores with the fitted normal."""
    plt = _pyplot()
    scores = np.asarray(scores, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(scores, bins=min(80, max(10, len(scores) // 50)), density=True, color="#a5d6a7", label="background")
    xs = np.linspace(scores.min(), scores.max(), 400)
    pdf = np.exp(-0.5 * ((xs - stats.mu) / stats.sigma) ** 2) / (stats.sigma * np.sqrt(2 * np.pi))
    ax.plot(xs, pdf, color="crimson", label=f"normal: mu {stats.mu:.3f}, sigma {stats.sigma:.3f}")
    ax.set_xlabel(f"raw {stats.scorer} score")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
