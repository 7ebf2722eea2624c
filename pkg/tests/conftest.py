from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from textalign import (
    GapParams,
    SegmentationPolicy,
    SegmentScorer,
    estimate_calibration,
    load_document,
    segment,
)
from textalign.data import toy_corpus_paths


@pytest.fixture(scope="session")
def toy_docs():
    policy = SegmentationPolicy(unit="sentence")
    return {
        path.stem: segment(load_document(path, path.stem), policy)
        for path in toy_corpus_paths().values()
    }


@pytest.fixture(scope="session")
def toy_calibration(toy_docs):
    """One shared background fit over all toy segments, so scores are
    comparable across document pairs."""
    pool = [(doc.doc_id, seg) for doc in toy_docs.values() for seg in doc.segments]
    scorer = SegmentScorer("jaccard")
    return estimate_calibration(
        lambda a, b: scorer(a[0], a[1], b[0], b[1]), pool, 3000, seed=7, scorer="jaccard"
    )


@pytest.fixture(scope="session")
def toy_gap():
    return GapParams(mode="linear", gap=-1.0)
