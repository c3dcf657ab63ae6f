"""Caption text index and retrieval.

A compact TF-IDF / cosine engine over image captions so multimodal
pipelines are executable end to end without an external text engine.
Captions are lowercased, split on non-alphanumeric characters and
filtered against a fixed 50-word stopword list shipped as a data file.

Builds are single-writer; queries are read-only and safe to run
concurrently.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

from .core import SIMILARITY, ImageRecord, ScoredList
from .fusion import DEFAULT_RRF_C, FusionRule, fuse
from .errors import EmptyInput

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def _load_stopwords() -> frozenset[str]:
    text = resources.files("imsearch").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


def tokenize(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop stopwords."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t and t not in stopwords]


@dataclass
class TextIndex:
    """Inverted index with per-document lengths and TF-IDF norms."""

    postings: dict[str, tuple[tuple[str, int], ...]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    skipped: int = 0
    _doc_norms: dict[str, float] = field(default_factory=dict)

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def _idf(self, term: str) -> float:
        df = self.document_frequency(term)
        return math.log(self.n_docs / df) if df else 0.0

    def _weight(self, count: int, length: int, term: str) -> float:
        if count == 0 or length == 0:
            return 0.0
        return (count / length) * self._idf(term)


def index_captions(
    records: Iterable[ImageRecord], stopwords: frozenset[str] = STOPWORDS
) -> TextIndex:
    """Build the caption index; records without a caption are skipped.

    Postings are sorted by imageId and document norms accumulate terms in
    sorted order, so the result is independent of insertion order.
    """
    term_counts: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    skipped = 0
    for record in records:
        caption = (record.caption or "").strip()
        if not caption:
            skipped += 1
            continue
        tokens = tokenize(caption, stopwords)
        if not tokens:
            skipped += 1
            continue
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        doc_lengths[record.image_id] = len(tokens)
        for term, count in counts.items():
            term_counts.setdefault(term, {})[record.image_id] = count

    index = TextIndex(
        postings={
            term: tuple(sorted(docs.items()))
            for term, docs in sorted(term_counts.items())
        },
        doc_lengths=doc_lengths,
        n_docs=len(doc_lengths),
        skipped=skipped,
    )

    norms: dict[str, float] = {doc: 0.0 for doc in doc_lengths}
    for term in sorted(index.postings):
        for doc_id, count in index.postings[term]:
            w = index._weight(count, doc_lengths[doc_id], term)
            norms[doc_id] += w * w
    index._doc_norms = {doc: math.sqrt(v) for doc, v in norms.items()}
    return index


def search_text(
    query: str,
    index: TextIndex,
    top_n: int | None = None,
    negated_terms: Iterable[str] | None = None,
) -> ScoredList:
    """Cosine similarity between TF-IDF vectors of the query and captions.

    Documents containing any negated term are excluded outright; there is
    no score-penalty path.
    """
    tokens = tokenize(query)
    excluded: set[str] = set()
    for raw_term in negated_terms or ():
        for term in tokenize(raw_term, frozenset()):
            for doc_id, _ in index.postings.get(term, ()):
                excluded.add(doc_id)

    if not tokens or index.n_docs == 0:
        return ScoredList((), SIMILARITY, source="text")

    query_counts: dict[str, int] = {}
    for token in tokens:
        query_counts[token] = query_counts.get(token, 0) + 1
    query_length = len(tokens)

    query_norm_sq = 0.0
    dots: dict[str, float] = {}
    for term in sorted(query_counts):
        qw = index._weight(query_counts[term], query_length, term)
        if qw == 0.0:
            continue
        query_norm_sq += qw * qw
        for doc_id, count in index.postings.get(term, ()):
            if doc_id in excluded:
                continue
            dw = index._weight(count, index.doc_lengths[doc_id], term)
            dots[doc_id] = dots.get(doc_id, 0.0) + qw * dw

    if query_norm_sq == 0.0:
        return ScoredList((), SIMILARITY, source="text")
    query_norm = math.sqrt(query_norm_sq)
    pairs = []
    for doc_id, dot in dots.items():
        doc_norm = index._doc_norms.get(doc_id, 0.0)
        if doc_norm > 0.0 and dot != 0.0:
            pairs.append((doc_id, dot / (query_norm * doc_norm)))
    return ScoredList.from_pairs(pairs, SIMILARITY, source="text").truncated(top_n)


def negated_terms_from_captions(
    negative_captions: Sequence[str], positive_captions: Sequence[str]
) -> set[str]:
    """Terms of negative captions not present in any positive caption."""
    positive: set[str] = set()
    for caption in positive_captions:
        positive.update(tokenize(caption))
    negated: set[str] = set()
    for caption in negative_captions:
        negated.update(t for t in tokenize(caption) if t not in positive)
    return negated


def fuse_multimodal(
    text_list: ScoredList | None,
    visual_lists: Sequence[ScoredList],
    rrf_c: float = DEFAULT_RRF_C,
    top_n: int | None = None,
) -> ScoredList:
    """Combine visual indices with combMNZ, then text with reciprocal rank.

    Without text the combMNZ fusion of the visual lists is returned;
    without visual lists the text list is passed through.
    """
    if not visual_lists:
        if text_list is None:
            raise EmptyInput("multimodal fusion needs at least one list")
        return text_list.to_similarity().truncated(top_n)
    visual = fuse(visual_lists, "combMNZ")
    if text_list is None or len(text_list) == 0:
        return visual.truncated(top_n)
    return fuse([visual, text_list], FusionRule("rrf", c=rrf_c), top_n=top_n)
