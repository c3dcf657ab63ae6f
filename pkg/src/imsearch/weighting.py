"""Post-indexing weighting: TF-IDF and frequent-item selection.

Weighting operates on raw visual-word count histograms and produces a
sibling weighted index rather than mutating the raw one, so a collection
can be re-weighted without re-extraction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InconsistentStats, InvalidParameter


@dataclass(frozen=True, eq=False)
class CollectionStats:
    """Document count and per-term document frequencies."""

    n_docs: int
    doc_frequency: np.ndarray  # int64, length = vocabulary size

    def __post_init__(self) -> None:
        df = np.asarray(self.doc_frequency, dtype=np.int64)
        if df.ndim != 1:
            raise InvalidParameter("doc_frequency must be one-dimensional")
        if self.n_docs < 0 or np.any(df < 0) or np.any(df > self.n_docs):
            raise InconsistentStats(
                f"document frequencies must lie in [0, {self.n_docs}]"
            )
        df.flags.writeable = False
        object.__setattr__(self, "doc_frequency", df)

    @property
    def terms(self) -> int:
        return int(self.doc_frequency.shape[0])


def collect_stats(histograms: Iterable[np.ndarray]) -> CollectionStats:
    """Accumulate document frequencies over count histograms.

    The reduction is associative, so the result does not depend on the
    iteration order.
    """
    df = None
    n = 0
    for hist in histograms:
        hist = np.asarray(hist)
        if df is None:
            df = np.zeros(hist.shape[0], dtype=np.int64)
        elif hist.shape[0] != df.shape[0]:
            raise DimensionMismatch("histograms have differing lengths")
        df += hist > 0
        n += 1
    if df is None:
        raise InvalidParameter("cannot collect statistics over zero documents")
    return CollectionStats(n, df)


def tfidf_weight(histogram: np.ndarray, stats: CollectionStats) -> np.ndarray:
    """TF-IDF weights (n_id / n_d) * ln(N / n_i) for a count histogram.

    Terms never seen in the collection and empty documents map to zero,
    as do terms absent from the document.  Natural logarithm; the base
    only rescales and never changes a ranking.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    if hist.ndim != 1 or hist.shape[0] != stats.terms:
        raise DimensionMismatch(
            f"histogram length {hist.shape} vs {stats.terms} collection terms"
        )
    if np.any(hist < 0):
        raise InvalidParameter("count histogram must be non-negative")
    n_d = hist.sum()
    if n_d == 0 or stats.n_docs == 0:
        return np.zeros_like(hist)
    df = stats.doc_frequency.astype(np.float64)
    safe_df = np.where(df > 0, df, 1.0)
    idf = np.where(df > 0, np.log(stats.n_docs / safe_df), 0.0)
    return (hist / n_d) * idf


def select_frequent_items(weights: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k largest weights, ties broken by lowest index.

    Only strictly non-zero weights qualify; with fewer than k of them,
    all are returned.  The result is sorted ascending for deterministic
    storage.
    """
    if k < 1:
        raise InvalidParameter("k must be >= 1")
    weights = np.asarray(weights, dtype=np.float64)
    nonzero = np.flatnonzero(weights != 0)
    ranked = sorted(nonzero, key=lambda i: (-weights[i], i))
    return tuple(sorted(int(i) for i in ranked[:k]))


@dataclass(frozen=True)
class FrequentItemSet:
    """Compact representation of one image: its top-k TF-IDF terms."""

    image_id: str
    items: tuple[int, ...]

    def to_json_dict(self) -> dict:
        return {"imageId": self.image_id, "items": list(self.items)}

    @classmethod
    def from_json_dict(cls, raw: dict) -> "FrequentItemSet":
        return cls(str(raw["imageId"]), tuple(int(i) for i in raw["items"]))


def stats_to_dict(stats: CollectionStats) -> dict:
    return {"N": stats.n_docs, "docFrequency": stats.doc_frequency.tolist()}


def stats_from_dict(raw: dict) -> CollectionStats:
    return CollectionStats(int(raw["N"]), np.asarray(raw["docFrequency"], dtype=np.int64))


def weight_collection(
    ids: Sequence[str], histograms: np.ndarray, stats: CollectionStats
) -> np.ndarray:
    """TF-IDF transform of a whole collection, row per document."""
    out = np.empty_like(np.asarray(histograms, dtype=np.float64))
    for row, hist in enumerate(histograms):
        out[row] = tfidf_weight(hist, stats)
    return out
