"""Distance metrics and similarity measures used for ranking.

Every measure has a pairwise kernel and, where it applies to dense
vectors, a bulk kernel scoring one query against a matrix of rows; both
are pure and reentrant.  Zero-denominator terms contribute zero across
canberra, chi-squared and the divergence measures so a single empty bin
never poisons a whole sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .core import DISTANCE, SIMILARITY, register_component
from .errors import DimensionMismatch, NegativeComponent, UnknownMetric


def _pair(p, q) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatch(f"vector shapes differ: {p.shape} vs {q.shape}")
    return p, q


def _bulk(matrix, q) -> tuple[np.ndarray, np.ndarray]:
    matrix = np.asarray(matrix, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if matrix.ndim != 2 or q.ndim != 1 or matrix.shape[1] != q.shape[0]:
        raise DimensionMismatch(f"matrix {matrix.shape} vs query {q.shape}")
    return matrix, q


def _require_non_negative(*arrays: np.ndarray) -> None:
    for arr in arrays:
        if np.any(arr < 0):
            raise NegativeComponent("measure requires non-negative inputs")


def euclidean(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.sqrt(np.sum((p - q) ** 2)))


def _euclidean_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    return np.sqrt(np.sum((matrix - q) ** 2, axis=1))


def manhattan(p, q) -> float:
    p, q = _pair(p, q)
    return float(np.sum(np.abs(p - q)))


def _manhattan_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    return np.sum(np.abs(matrix - q), axis=1)


def canberra(p, q) -> float:
    p, q = _pair(p, q)
    denom = np.abs(p) + np.abs(q)
    terms = np.divide(np.abs(p - q), denom, out=np.zeros_like(denom), where=denom != 0)
    return float(terms.sum())


def _canberra_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    denom = np.abs(matrix) + np.abs(q)
    terms = np.divide(np.abs(matrix - q), denom, out=np.zeros_like(denom), where=denom != 0)
    return terms.sum(axis=1)


def chi2(p, q) -> float:
    p, q = _pair(p, q)
    _require_non_negative(p, q)
    denom = p + q
    terms = np.divide((p - q) ** 2, denom, out=np.zeros_like(denom), where=denom != 0)
    return float(0.5 * terms.sum())


def _chi2_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    _require_non_negative(matrix, q)
    denom = matrix + q
    terms = np.divide((matrix - q) ** 2, denom, out=np.zeros_like(denom), where=denom != 0)
    return 0.5 * terms.sum(axis=1)


def jeffrey(p, q) -> float:
    """Divergence as the sum log(2p/(p+q)) + log(2q/(p+q)) per component.

    Terms where either side lacks a positive value contribute zero; this
    guard removes the log singularities at empty bins.  Note the standard
    per-component weighting by p and q is intentionally absent here; see
    :func:`jeffrey_standard` for the weighted form.
    """
    p, q = _pair(p, q)
    mask = (p > 0) & (q > 0)
    if not mask.any():
        return 0.0
    ps, qs = p[mask], q[mask]
    s = ps + qs
    return float(np.sum(np.log(2.0 * ps / s) + np.log(2.0 * qs / s)))


def _jeffrey_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    mask = (matrix > 0) & (q > 0)
    s = matrix + q
    safe = np.where(mask, s, 1.0)
    pm = np.where(mask, matrix, 1.0)
    qm = np.where(mask, np.broadcast_to(q, matrix.shape), 1.0)
    terms = np.where(mask, np.log(2.0 * pm / safe) + np.log(2.0 * qm / safe), 0.0)
    return terms.sum(axis=1)


def jeffrey_standard(p, q) -> float:
    """Weighted variant: sum p log(2p/(p+q)) + q log(2q/(p+q)), zero-guarded."""
    p, q = _pair(p, q)
    s = p + q
    out = 0.0
    mask_p = p > 0
    mask_q = q > 0
    out += float(np.sum(p[mask_p] * np.log(2.0 * p[mask_p] / s[mask_p])))
    out += float(np.sum(q[mask_q] * np.log(2.0 * q[mask_q] / s[mask_q])))
    return out


def _jeffrey_standard_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    s = matrix + q
    qb = np.broadcast_to(q, matrix.shape)
    mask_p = matrix > 0
    mask_q = qb > 0
    safe_s = np.where(s > 0, s, 1.0)
    p_terms = np.where(mask_p, matrix * np.log(2.0 * np.where(mask_p, matrix, 1.0) / safe_s), 0.0)
    q_terms = np.where(mask_q, qb * np.log(2.0 * np.where(mask_q, qb, 1.0) / safe_s), 0.0)
    return (p_terms + q_terms).sum(axis=1)


def histogram_intersection(p, q) -> float:
    p, q = _pair(p, q)
    _require_non_negative(p, q)
    return float(np.minimum(p, q).sum())


def _histogram_intersection_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    _require_non_negative(matrix, q)
    return np.minimum(matrix, q).sum(axis=1)


def cosine(p, q) -> float:
    p, q = _pair(p, q)
    np_norm = np.linalg.norm(p)
    nq_norm = np.linalg.norm(q)
    if np_norm == 0.0 or nq_norm == 0.0:
        return 0.0
    return float(np.dot(p, q) / (np_norm * nq_norm))


def _cosine_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    q_norm = np.linalg.norm(q)
    row_norms = np.linalg.norm(matrix, axis=1)
    if q_norm == 0.0:
        return np.zeros(matrix.shape[0])
    dots = matrix @ q
    safe = np.where(row_norms == 0.0, 1.0, row_norms)
    return np.where(row_norms == 0.0, 0.0, dots / (safe * q_norm))


def _check_bits(arr: np.ndarray) -> None:
    if not np.all((arr == 0) | (arr == 1)):
        raise NegativeComponent("hamming distance requires 0/1 vectors")


def hamming(p, q) -> int:
    """Number of set bits of p XOR q, for 0/1 vectors."""
    p, q = _pair(p, q)
    _check_bits(p)
    _check_bits(q)
    return int(np.sum(p != q))


def _hamming_bulk(matrix, q) -> np.ndarray:
    matrix, q = _bulk(matrix, q)
    _check_bits(matrix)
    _check_bits(q)
    return np.sum(matrix != q, axis=1).astype(np.float64)


def frequent_item_similarity(p: Iterable[int], q: Iterable[int]) -> int:
    """Number of shared frequent items between two item sets."""
    return len(frozenset(p) & frozenset(q))


@dataclass(frozen=True)
class Metric:
    """A named measure with fixed polarity and optional bulk kernel."""

    name: str
    polarity: str
    func: Callable
    bulk: Callable | None = None


_METRICS = {
    m.name: m
    for m in (
        Metric("euclidean", DISTANCE, euclidean, _euclidean_bulk),
        Metric("manhattan", DISTANCE, manhattan, _manhattan_bulk),
        Metric("canberra", DISTANCE, canberra, _canberra_bulk),
        Metric("chi2", DISTANCE, chi2, _chi2_bulk),
        Metric("jeffrey", DISTANCE, jeffrey, _jeffrey_bulk),
        Metric("jeffrey-standard", DISTANCE, jeffrey_standard, _jeffrey_standard_bulk),
        Metric("histogram-intersection", SIMILARITY, histogram_intersection,
               _histogram_intersection_bulk),
        Metric("cosine", SIMILARITY, cosine, _cosine_bulk),
        Metric("hamming", DISTANCE, hamming, _hamming_bulk),
        Metric("frequent-item", SIMILARITY, frequent_item_similarity, None),
    )
}


def metric(name: str) -> Metric:
    try:
        return _METRICS[name]
    except KeyError:
        raise UnknownMetric(
            f"no measure named {name!r}; available: {', '.join(sorted(_METRICS))}"
        ) from None


def metric_names() -> tuple[str, ...]:
    return tuple(sorted(_METRICS))


def bulk_scores(name: str, matrix, query) -> np.ndarray:
    """Score a query against every row of a matrix under a named measure."""
    m = metric(name)
    if m.bulk is None:
        raise UnknownMetric(f"measure {name!r} has no dense bulk form")
    return m.bulk(matrix, query)


for _m in _METRICS.values():
    register_component("metric", _m.name, lambda _m=_m: _m, {})
