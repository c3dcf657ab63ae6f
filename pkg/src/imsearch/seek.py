"""Online query-by-example search with relevance feedback.

A query is transformed with the exact pipeline recorded in the index
configuration, merged with positive and negative examples through the
Rocchio formula, shortlisted (explicitly, or by the index's ANN
structure when present) and ranked by the configured measure.  Seekers
are stateless over a read-only index and safe for concurrent queries.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import IndexConfig, ImageRecord, ScoredList, load_config
from .errors import (
    DimensionMismatch,
    EmptyInput,
    FeatureExtractionFailed,
    ImageSearchError,
    IndexNotFound,
    InvalidParameter,
)
from .fusion import FusionRule, fuse
from .indexing import (
    CONFIG_FILE,
    FREQUENT_ITEMS_FILE,
    LSH_DIR,
    RECORDS_FILE,
    STATS_FILE,
    build_descriptor_model,
    read_records,
)
from .lsh import LshIndex
from .store import open_store
from .weighting import (
    FrequentItemSet,
    select_frequent_items,
    stats_from_dict,
    tfidf_weight,
)

# measures whose domain excludes negative components; Rocchio output is
# clamped at zero before scanning under them
NON_NEGATIVE_METRICS = frozenset({"chi2", "histogram-intersection"})


@dataclass(frozen=True, eq=False)
class QuerySpec:
    """Positive/negative examples (imageIds or images), text, filters."""

    positives: tuple = ()
    negatives: tuple = ()
    text: str | None = None
    modalities: frozenset[str] | None = None
    top_n: int = 30
    metric: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))
        if self.modalities is not None:
            object.__setattr__(self, "modalities", frozenset(self.modalities))
        if self.top_n < 1:
            raise InvalidParameter("topN must be >= 1")
        if not self.positives and not (self.text and self.text.strip()):
            raise InvalidParameter("a query needs positive examples or text")


@dataclass(frozen=True)
class RocchioParams:
    """Weights of the original, relevant and non-relevant terms.

    Defaults follow the deployed relevance-feedback setup: the query and
    relevant images form one set, so the original-query weight is folded
    into the relevant weight (alpha = 0, beta = 0.6, gamma = 0.4).  The
    classic alpha = 1 form is available by passing explicit weights.
    """

    alpha: float = 0.0
    beta: float = 0.6
    gamma: float = 0.4

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise InvalidParameter("Rocchio weights must be non-negative")


def rocchio_merge(
    original: np.ndarray,
    relevant: Iterable[np.ndarray],
    nonrelevant: Iterable[np.ndarray],
    params: RocchioParams,
    clamp_negative: bool = False,
) -> np.ndarray:
    """q_m = alpha q_o + beta mean(relevant) - gamma mean(nonrelevant).

    An empty relevant or non-relevant set contributes zero.  With
    ``clamp_negative`` the result's negative components are clamped to
    zero for measures whose domain requires it.
    """
    original = np.asarray(original, dtype=np.float64)

    def term_mean(vectors: Iterable[np.ndarray]) -> np.ndarray | None:
        vectors = [np.asarray(v, dtype=np.float64) for v in vectors]
        if not vectors:
            return None
        for v in vectors:
            if v.shape != original.shape:
                raise DimensionMismatch(
                    f"example of shape {v.shape} vs query shape {original.shape}"
                )
        return sum(vectors[1:], start=vectors[0]) / len(vectors)

    merged = params.alpha * original
    relevant_mean = term_mean(relevant)
    if relevant_mean is not None:
        merged = merged + params.beta * relevant_mean
    nonrelevant_mean = term_mean(nonrelevant)
    if nonrelevant_mean is not None:
        merged = merged - params.gamma * nonrelevant_mean
    if clamp_negative:
        merged = np.maximum(merged, 0.0)
    return merged


class IndexHandle:
    """Read-only view of an index directory for query-time use."""

    def __init__(self, directory: str | Path) -> None:
        directory = Path(directory)
        config_path = directory / CONFIG_FILE
        if not config_path.is_file():
            raise IndexNotFound(f"no index configuration at {config_path}")
        self.directory = directory
        self.config: IndexConfig = load_config(config_path)
        self.model = build_descriptor_model(self.config, base=directory)
        location = self.config.storer.location
        backend = self.config.storer.backend
        self.raw_store = open_store(backend, directory / location)

        self.stats = None
        stats_path = directory / STATS_FILE
        if stats_path.is_file():
            self.stats = stats_from_dict(json.loads(stats_path.read_text(encoding="utf-8")))

        scheme = self.config.weighting.scheme
        if scheme == "tfidf":
            self.scan_store = open_store(backend, directory / "weighted" / location)
        else:
            self.scan_store = self.raw_store

        self.frequent_items: dict[str, frozenset[int]] = {}
        fi_path = directory / FREQUENT_ITEMS_FILE
        if fi_path.is_file():
            for line in fi_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    fi = FrequentItemSet.from_json_dict(json.loads(line))
                    self.frequent_items[fi.image_id] = frozenset(fi.items)

        self.records: dict[str, ImageRecord] = read_records(directory / RECORDS_FILE)

        self.lsh: LshIndex | None = None
        if (directory / LSH_DIR).is_dir():
            self.lsh = LshIndex.load(directory / LSH_DIR)

    def __len__(self) -> int:
        return len(self.raw_store)

    @property
    def default_metric(self) -> str:
        return self.config.distance_default

    def raw_descriptor(self, image: np.ndarray) -> np.ndarray:
        """Raw-space descriptor of an image, canonicalized to float32.

        For an indexed image this reproduces the stored vector bit for
        bit: the pipeline is deterministic and the storage boundary casts
        exactly the same way.
        """
        try:
            vector = self.model.describe_image(image)
        except ImageSearchError as exc:
            raise FeatureExtractionFailed(str(exc)) from exc
        return vector.astype(np.float32)

    def query_vector(self, example) -> np.ndarray:
        """Scan-space vector of an imageId or image array, float64."""
        scheme = self.config.weighting.scheme
        if isinstance(example, str):
            if scheme == "frequent-items":
                counts = self.raw_store.get(example).astype(np.float64)
                return tfidf_weight(counts, self.stats)
            return self.scan_store.get(example).astype(np.float64)
        raw = self.raw_descriptor(example).astype(np.float64)
        if scheme == "none":
            return raw
        weighted = tfidf_weight(raw, self.stats)
        if scheme == "tfidf":
            return weighted.astype(np.float32).astype(np.float64)
        return weighted


def open_index(directory: str | Path) -> IndexHandle:
    return IndexHandle(directory)


def _scan_frequent_items(
    handle: IndexHandle,
    merged: np.ndarray,
    shortlist: set[str] | None,
    top_n: int | None,
) -> ScoredList:
    items = frozenset(select_frequent_items(merged, handle.config.weighting.k))
    table = handle.frequent_items
    candidates = table.keys() if shortlist is None else (set(shortlist) & table.keys())
    scores = ((image_id, float(len(items & table[image_id]))) for image_id in candidates)
    return ScoredList.from_pairs(scores, "similarity", source="frequent-item").truncated(top_n)


def _merged_query(
    handle: IndexHandle,
    query: QuerySpec,
    params: RocchioParams,
) -> tuple[np.ndarray, str]:
    if not query.positives:
        raise EmptyInput("visual search needs at least one positive example")
    positives = [handle.query_vector(p) for p in query.positives]
    negatives = [handle.query_vector(n) for n in query.negatives]
    metric_name = query.metric or handle.default_metric
    original = sum(positives[1:], start=positives[0]) / len(positives)
    if params.alpha == 0 and params.beta > 0 and (params.gamma == 0 or not negatives):
        # Pure positive-example query: the relevant-term weight has no
        # negative term to balance, and shrinking the query vector would
        # distort scale-sensitive measures (and break exact self
        # retrieval), so search with the mean positive vector itself.
        merged = original
        if metric_name in NON_NEGATIVE_METRICS:
            merged = np.maximum(merged, 0.0)
    else:
        merged = rocchio_merge(
            original,
            positives,
            negatives,
            params,
            clamp_negative=metric_name in NON_NEGATIVE_METRICS,
        )
    return merged, metric_name


def search_rocchio(
    handle: IndexHandle,
    query: QuerySpec,
    params: RocchioParams | None = None,
    shortlist: Iterable[str] | None = None,
    top_n: int | None = 0,
) -> ScoredList:
    """Rocchio-merged query against one index.

    The shortlist precedence is: an explicit shortlist argument, then the
    index's ANN structure, then a full scan.  ``top_n`` defaults to the
    query's; pass None for the full ranking.
    """
    params = params or RocchioParams()
    merged, metric_name = _merged_query(handle, query, params)
    if top_n == 0:
        top_n = query.top_n
    if shortlist is not None:
        shortlist = set(shortlist)
    if handle.config.weighting.scheme == "frequent-items":
        return _scan_frequent_items(handle, merged, shortlist, top_n)
    if shortlist is None and handle.lsh is not None:
        shortlist = handle.lsh.shortlist(merged)
    return handle.scan_store.scan(merged, metric_name, shortlist, top_n)


def search_late_fusion(
    handle: IndexHandle,
    query: QuerySpec,
    rule: FusionRule | str = "combSUM",
    shortlist: Iterable[str] | None = None,
) -> ScoredList:
    """One search per positive example, fused; negatives are ignored."""
    if not query.positives:
        raise EmptyInput("late fusion needs at least one positive example")
    metric_name = query.metric or handle.default_metric
    clamp = metric_name in NON_NEGATIVE_METRICS
    if shortlist is not None:
        shortlist = set(shortlist)

    def search_one(example) -> ScoredList:
        vector = handle.query_vector(example)
        if clamp:
            vector = np.maximum(vector, 0.0)
        if handle.config.weighting.scheme == "frequent-items":
            return _scan_frequent_items(handle, vector, shortlist, query.top_n)
        members = shortlist
        if members is None and handle.lsh is not None:
            members = handle.lsh.shortlist(vector)
        return handle.scan_store.scan(vector, metric_name, members, query.top_n)

    if len(query.positives) > 1:
        with ThreadPoolExecutor(max_workers=min(8, len(query.positives))) as pool:
            lists = list(pool.map(search_one, query.positives))
    else:
        lists = [search_one(query.positives[0])]
    return fuse(lists, rule, top_n=query.top_n)


def search_modality_filtered(
    handle: IndexHandle,
    query: QuerySpec,
    params: RocchioParams | None = None,
    shortlist: Iterable[str] | None = None,
) -> ScoredList:
    """Rocchio search filtered to the requested modalities.

    Results whose record modality is not in the query's set are removed
    before truncation, never after, so filtering cannot starve the
    requested result count while matches remain.  An empty or absent
    modality set disables filtering.
    """
    full = search_rocchio(handle, query, params, shortlist, top_n=None)
    if query.modalities:
        records = handle.records

        def keep(image_id: str) -> bool:
            record = records.get(image_id)
            return record is not None and record.modality in query.modalities

        full = full.filtered(keep)
    return full.truncated(query.top_n)
