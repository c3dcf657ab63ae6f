"""Late fusion of retrieved result lists.

Input lists are converted to similarity polarity (s = 1 / (1 + d) for
distances) before fusing.  Score-based rules optionally min-max
normalize each list to [0, 1] first, on by default, because lists
produced under different measures are not score-commensurable.  The
candidate universe is the union of the input lists: images never
retrieved are never fused in.

Missing-image conventions: combSUM and combMNZ treat absence as score
zero; combMAX, combMIN, borda, rrf and linear aggregate only over the
lists that contain the image.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import SIMILARITY, ParamSpec, ScoredList, register_component
from .errors import (
    EmptyInput,
    InvalidParameter,
    WeightMismatch,
    WeightsNotNormalized,
)

RULES = ("combSUM", "combMNZ", "combMAX", "combMIN", "linear", "borda", "rrf")
DEFAULT_RRF_C = 60.0
_SCORE_RULES = frozenset({"combSUM", "combMNZ", "combMAX", "combMIN", "linear"})


@dataclass(frozen=True)
class FusionRule:
    """A named rule plus its parameters (positional weights, rrf constant)."""

    name: str
    weights: tuple[float, ...] | None = None
    c: float = DEFAULT_RRF_C

    def __post_init__(self) -> None:
        if self.name not in RULES:
            raise InvalidParameter(f"unknown fusion rule: {self.name!r}")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.c <= 0:
            raise InvalidParameter("rrf constant must be > 0")


def min_max_normalize(scored: ScoredList) -> ScoredList:
    """Map scores linearly onto [0, 1]; constant lists map to all ones."""
    if not scored.entries:
        return scored
    values = [s for _, s in scored.entries]
    low, high = min(values), max(values)
    if high == low:
        entries = tuple((i, 1.0) for i, _ in scored.entries)
    else:
        span = high - low
        entries = tuple((i, (s - low) / span) for i, s in scored.entries)
    return ScoredList(entries, scored.polarity, scored.source)


def fuse(
    lists: Sequence[ScoredList],
    rule: FusionRule | str,
    top_n: int | None = None,
    normalize: bool = True,
) -> ScoredList:
    """Fuse ranked lists under one rule; output is similarity polarity,
    sorted descending with ties broken by imageId and truncated to top_n.
    """
    if isinstance(rule, str):
        rule = FusionRule(rule)
    if not lists:
        raise EmptyInput("fusion requires at least one input list")
    if rule.name == "linear":
        if rule.weights is None or len(rule.weights) != len(lists):
            raise WeightMismatch(
                f"linear fusion needs one weight per list "
                f"({0 if rule.weights is None else len(rule.weights)} for {len(lists)} lists)"
            )
        if any(w < 0 or w > 1 for w in rule.weights):
            raise WeightsNotNormalized("linear weights must lie in [0, 1]")
        if abs(sum(rule.weights) - 1.0) > 1e-9:
            raise WeightsNotNormalized(f"linear weights sum to {sum(rule.weights)}")

    converted = [sl.to_similarity() for sl in lists]
    if normalize and rule.name in _SCORE_RULES:
        converted = [min_max_normalize(sl) for sl in converted]

    # Per-image contributions are reduced with math.fsum, whose exactly
    # rounded result makes the comb/borda/rrf rules invariant to the
    # order of the input lists.
    if rule.name in ("borda", "rrf"):
        contributions: dict[str, list[float]] = defaultdict(list)
        for sl in converted:
            for rank, (image_id, _) in enumerate(sl.entries, start=1):
                if rule.name == "borda":
                    contributions[image_id].append(1.0 / rank)
                else:
                    contributions[image_id].append(1.0 / (rule.c + rank))
        scores = {i: math.fsum(v) for i, v in contributions.items()}
    elif rule.name in ("combSUM", "combMNZ"):
        contributions = defaultdict(list)
        for sl in converted:
            for image_id, score in sl.entries:
                contributions[image_id].append(score)
        if rule.name == "combSUM":
            scores = {i: math.fsum(v) for i, v in contributions.items()}
        else:
            scores = {
                i: sum(1 for s in v if s > 0) * math.fsum(v)
                for i, v in contributions.items()
            }
    elif rule.name in ("combMAX", "combMIN"):
        contributions = defaultdict(list)
        for sl in converted:
            for image_id, score in sl.entries:
                contributions[image_id].append(score)
        op = max if rule.name == "combMAX" else min
        scores = {i: op(v) for i, v in contributions.items()}
    else:  # linear
        contributions = defaultdict(list)
        for weight, sl in zip(rule.weights, converted):
            for image_id, score in sl.entries:
                contributions[image_id].append(weight * score)
        scores = {i: math.fsum(v) for i, v in contributions.items()}

    fused_list = ScoredList.from_pairs(scores.items(), SIMILARITY, source=rule.name)
    return fused_list.truncated(top_n)


class _BoundFusor:
    """Registry instance: a rule with fuse() bound to it."""

    def __init__(self, rule: FusionRule, normalize: bool = True) -> None:
        self.rule = rule
        self.normalize = normalize

    def fuse(self, lists: Sequence[ScoredList], top_n: int | None = None) -> ScoredList:
        return fuse(lists, self.rule, top_n=top_n, normalize=self.normalize)

    __call__ = fuse


def _register() -> None:
    for name in RULES:
        params = {"normalize": ParamSpec((bool,), True)}
        if name == "linear":
            params["weights"] = ParamSpec((tuple, list))
        if name == "rrf":
            params["c"] = ParamSpec((int, float), DEFAULT_RRF_C, lambda v: v > 0)

        def factory(_n=name, **kwargs):
            normalize = kwargs.pop("normalize", True)
            weights = kwargs.pop("weights", None)
            c = kwargs.pop("c", DEFAULT_RRF_C)
            rule = FusionRule(
                _n,
                weights=None if weights is None else tuple(weights),
                c=float(c),
            )
            return _BoundFusor(rule, normalize)

        register_component("fusor", name, factory, params)


_register()


# ---------------------------------------------------------------------------
# TREC-style run files: `queryId imageId rank score tag`, whitespace-separated
# ---------------------------------------------------------------------------

def read_run_file(path: str | Path) -> dict[str, ScoredList]:
    """Parse a run file into one similarity-polarity list per query."""
    per_query: dict[str, list[tuple[int, str, float]]] = defaultdict(list)
    tags: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise InvalidParameter(
                f"{path}:{line_no}: expected 'queryId imageId rank score tag'"
            )
        query_id, image_id, rank, score, tag = parts
        per_query[query_id].append((int(rank), image_id, float(score)))
        tags[query_id] = tag
    out = {}
    for query_id, rows in per_query.items():
        rows.sort(key=lambda r: (r[0], r[1]))
        entries = tuple((image_id, score) for _, image_id, score in rows)
        out[query_id] = ScoredList.from_pairs(entries, SIMILARITY, source=tags[query_id])
    return out


def write_run_file(path: str | Path, runs: dict[str, ScoredList], tag: str = "run") -> None:
    lines = []
    for query_id in sorted(runs):
        scored = runs[query_id].to_similarity()
        for rank, (image_id, score) in enumerate(scored.entries, start=1):
            lines.append(f"{query_id} {image_id} {rank} {score!r} {tag}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
