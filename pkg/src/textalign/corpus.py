"""Document ingestion and segmentation.

Turns raw UTF-8 text files into ordered sequences of segments (sentences,
paragraphs, or word chunks) that the alignment engine consumes. Segments
carry character spans back into the source text so reports can quote the
original wording.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DecodeError, EmptyDocumentError, InsufficientTextError

# Abbreviations that suppress a sentence boundary after their trailing period.
ABBREVIATIONS = frozenset({"mr", "mrs", "dr", "st", "etc", "vs", "e.g", "i.e"})

_TOKEN_RE = re.compile(r"[0-9a-z]+")
_WORD_RE = re.compile(r"\S+")
_PARA_SPLIT_RE = re.compile(r"\n(?:[ \t]*\n)+")
_SENT_PUNCT_RE = re.compile(r"[.!?]+")

DEFAULT_MIN_WORDS = {"sentence": 0, "paragraph": 5, "fixed_chunk": 0, "equal_chunks": 0}


@dataclass
class RawDocument:
    id: str
    text: str
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SegmentationPolicy:
    """How a document is cut into alignment units.

    ``min_words`` counts tokens; shorter segments are merged into the
    following one (the last merges backward). ``None`` picks the per-unit
    default (0 everywhere except 5 for paragraphs).
    """

    unit: str = "paragraph"
    words_per_chunk: int | None = None
    chunk_count: int | None = None
    min_words: int | None = None

    def __post_init__(self) -> None:
        if self.unit not in ("sentence", "paragraph", "fixed_chunk", "equal_chunks"):
            raise ValueError(f"unknown segmentation unit: {self.unit!r}")
        if self.unit == "fixed_chunk" and (self.words_per_chunk is None or self.words_per_chunk < 1):
            raise ValueError("fixed_chunk requires words_per_chunk >= 1")
        if self.unit == "equal_chunks" and (self.chunk_count is None or self.chunk_count < 1):
            raise ValueError("equal_chunks requires chunk_count >= 1")
        if self.min_words is not None and self.min_words < 0:
            raise ValueError("min_words must be non-negative")

    @property
    def effective_min_words(self) -> int:
        if self.min_words is None:
            return DEFAULT_MIN_WORDS[self.unit]
        return self.min_words

    def to_dict(self) -> dict:
        out: dict = {"unit": self.unit, "min_words": self.effective_min_words}
        if self.unit == "fixed_chunk":
            out["words_per_chunk"] = self.words_per_chunk
        if self.unit == "equal_chunks":
            out["count"] = self.chunk_count
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentationPolicy":
        return cls(
            unit=d["unit"],
            words_per_chunk=d.get("words_per_chunk"),
            chunk_count=d.get("count"),
            min_words=d.get("min_words"),
        )


@dataclass
class Segment:
    index: int
    text: str
    tokens: list[str]
    char_span: tuple[int, int]


@dataclass
class SegmentedDocument:
    doc_id: str
    policy: SegmentationPolicy
    segments: list[Segment]

    def __len__(self) -> int:
        return len(self.segments)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "policy": self.policy.to_dict(),
            "segments": [
                {"index": s.index, "text": s.text, "char_span": [s.char_span[0], s.char_span[1]]}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentedDocument":
        segments = [
            Segment(
                index=s["index"],
                text=s["text"],
                tokens=tokenize(s["text"]),
                char_span=(s["char_span"][0], s["char_span"][1]),
            )
            for s in d["segments"]
        ]
        return cls(doc_id=d["doc_id"], policy=SegmentationPolicy.from_dict(d["policy"]), segments=segments)


def load_document(path: str | Path, id: str, metadata: dict[str, str] | None = None) -> RawDocument:
    """Read a UTF-8 text file, strip any BOM and normalize CRLF to LF.

    Raises DecodeError (naming the byte offset) on invalid UTF-8 and
    EmptyDocumentError if nothing but whitespace remains.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from exc
    if text.startswith("﻿"):
        text = text[1:]
    text = text.replace("\r\n", "\n")
    if not text.strip():
        raise EmptyDocumentError(f"{path}: document is empty after trimming whitespace")
    meta = {"source": str(path)}
    if metadata:
        meta.update(metadata)
    return RawDocument(id=id, text=text, metadata=meta)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


def _words_with_spans(text: str) -> list[tuple[int, int]]:
    """Spans of whitespace-delimited words."""
    return [(m.start(), m.end()) for m in _WORD_RE.finditer(text)]


def _sentence_boundaries(text: str) -> list[int]:
    """Offsets just past each sentence-final punctuation run."""
    bounds = []
    for m in _SENT_PUNCT_RE.finditer(text):
        end = m.end()
        if end < len(text):
            # Require whitespace then an uppercase letter to call it a boundary.
            k = end
            while k < len(text) and text[k].isspace():
                k += 1
            if k == end or k >= len(text) or not text[k].isupper():
                continue
        # Abbreviation check on the word preceding the punctuation run.
        j = m.start()
        i = j
        while i > 0 and (text[i - 1].isalnum() or text[i - 1] == "."):
            i -= 1
        word = text[i:j].lower().strip(".")
        if word in ABBREVIATIONS:
            continue
        bounds.append(end)
    return bounds


def _trim_span(text: str, start: int, end: int) -> tuple[int, int] | None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start >= end:
        return None
    return start, end


def _raw_spans(doc: RawDocument, policy: SegmentationPolicy) -> list[tuple[int, int]]:
    text = doc.text
    if policy.unit == "paragraph":
        spans, pos = [], 0
        for m in _PARA_SPLIT_RE.finditer(text):
            spans.append((pos, m.start()))
            pos = m.end()
        spans.append((pos, len(text)))
        return [t for s, e in spans if (t := _trim_span(text, s, e))]
    if policy.unit == "sentence":
        spans, pos = [], 0
        for b in _sentence_boundaries(text):
            spans.append((pos, b))
            pos = b
        spans.append((pos, len(text)))
        return [t for s, e in spans if (t := _trim_span(text, s, e))]

    words = _words_with_spans(text)
    n = len(words)
    if policy.unit == "fixed_chunk":
        k = policy.words_per_chunk
        groups = [words[i : i + k] for i in range(0, n, k)]
    else:  # equal_chunks
        m = policy.chunk_count
        if m > n:
            raise InsufficientTextError(
                f"{doc.id}: equal_chunks({m}) needs at least {m} words, document has {n}"
            )
        base, extra = divmod(n, m)
        groups, pos = [], 0
        for i in range(m):
            size = base + (1 if i < extra else 0)
            groups.append(words[pos : pos + size])
            pos += size
    return [(g[0][0], g[-1][1]) for g in groups if g]


def segment(doc: RawDocument, policy: SegmentationPolicy) -> SegmentedDocument:
    """Cut ``doc`` into segments according to ``policy``.

    Paragraphs split on blank-line runs; sentences on ``.!?`` followed by
    whitespace and an uppercase letter (with an abbreviation stop-list);
    fixed_chunk packs exactly ``words_per_chunk`` words per segment (last
    may be short); equal_chunks makes ``count`` segments whose word counts
    differ by at most one, earlier segments taking the extra word.
    """
    if not doc.text.strip():
        raise EmptyDocumentError(f"{doc.id}: document is empty")
    spans = _raw_spans(doc, policy)

    min_words = policy.effective_min_words
    if min_words > 0:
        merged: list[tuple[int, int]] = []
        i = 0
        while i < len(spans):
            start, end = spans[i]
            i += 1
            while len(tokenize(doc.text[start:end])) < min_words and i < len(spans):
                end = spans[i][1]
                i += 1
            if len(tokenize(doc.text[start:end])) < min_words and merged:
                merged[-1] = (merged[-1][0], end)
            else:
                merged.append((start, end))
        spans = merged

    segments = []
    for idx, (start, end) in enumerate(spans):
        seg_text = doc.text[start:end]
        segments.append(Segment(index=idx, text=seg_text, tokens=tokenize(seg_text), char_span=(start, end)))
    if not segments:
        raise EmptyDocumentError(f"{doc.id}: segmentation produced no segments")
    return SegmentedDocument(doc_id=doc.id, policy=policy, segments=segments)
