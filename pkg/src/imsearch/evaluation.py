"""Retrieval evaluation: average precision, mAP and experiment grids.

Average precision is computed over the returned list only, in the
trec_eval convention: relevant items never retrieved contribute zero
precision.  The matrix experiment reproduces the structure of a
feature-by-measure evaluation (rows of local features, columns of
measures, averaged over vocabulary sizes) plus representation and
fusion-rule tables, on any labeled corpus; every run is seeded.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import DISTANCE, ExtractorParams, ScoredList
from .corpus import LabeledCorpus
from .describe import (
    describe_bovw,
    describe_binary_bovw,
    describe_grid_bovw,
    describe_spm_bovw,
    describe_vlad,
)
from .errors import CorpusTooSmall, EmptyInput, InvalidParameter, MissingVocabulary
from .extract import extract_features
from .indexing import load_image
from .measures import bulk_scores, metric
from .vocab import train_kmeans

__all__ = [
    "RunResult",
    "EvalReport",
    "average_precision",
    "mean_average_precision",
    "evaluate_run",
    "read_qrels",
    "write_qrels",
    "FeatureSpec",
    "ExperimentGrid",
    "MatrixResult",
    "run_matrix_experiment",
]


@dataclass(frozen=True)
class RunResult:
    """Per-topic ranked lists plus a descriptor of the configuration."""

    topics: dict[str, ScoredList]
    config: str = ""


@dataclass(frozen=True)
class EvalReport:
    per_topic: dict[str, float]
    mean: float
    unjudged: tuple[str, ...]


def average_precision(ranked: ScoredList | Sequence[str], relevant: set[str]) -> float:
    """Mean of precision-at-rank over the relevant ranks, over |relevant|."""
    if not relevant:
        raise EmptyInput("average precision needs a non-empty relevant set")
    ids = ranked.ids() if isinstance(ranked, ScoredList) else tuple(ranked)
    hits = 0
    total = 0.0
    for rank, image_id in enumerate(ids, start=1):
        if image_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def evaluate_run(
    run: RunResult | Mapping[str, ScoredList], qrels: Mapping[str, set[str]]
) -> EvalReport:
    """Per-topic AP and its mean; unjudged topics are excluded and listed."""
    topics = run.topics if isinstance(run, RunResult) else run
    per_topic: dict[str, float] = {}
    unjudged: list[str] = []
    for topic_id in sorted(topics):
        relevant = qrels.get(topic_id)
        if not relevant:
            unjudged.append(topic_id)
            continue
        per_topic[topic_id] = average_precision(topics[topic_id], relevant)
    mean = sum(per_topic.values()) / len(per_topic) if per_topic else 0.0
    return EvalReport(per_topic, mean, tuple(unjudged))


def mean_average_precision(
    run: RunResult | Mapping[str, ScoredList], qrels: Mapping[str, set[str]]
) -> float:
    return evaluate_run(run, qrels).mean


def read_qrels(path: str | Path) -> dict[str, set[str]]:
    """TREC qrels: `topicId 0 imageId relevance`, whitespace-separated."""
    qrels: dict[str, set[str]] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise InvalidParameter(f"{path}:{line_no}: expected 'topicId 0 imageId relevance'")
        topic_id, _, image_id, relevance = parts
        qrels.setdefault(topic_id, set())
        if int(relevance) > 0:
            qrels[topic_id].add(image_id)
    return {t: r for t, r in qrels.items() if r}


def write_qrels(path: str | Path, qrels: Mapping[str, set[str]]) -> None:
    lines = [
        f"{topic_id} 0 {image_id} 1"
        for topic_id in sorted(qrels)
        for image_id in sorted(qrels[topic_id])
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


# ---------------------------------------------------------------------------
# Matrix experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSpec:
    """One row of the experiment: a named local-feature configuration."""

    name: str
    extractor: ExtractorParams


@dataclass(frozen=True)
class ExperimentGrid:
    features: tuple[FeatureSpec, ...]
    vocab_sizes: tuple[int, ...]
    metrics: tuple[str, ...]
    representations: tuple[str, ...] = ("bovw",)
    fusion_rules: tuple[str, ...] = ()
    grid_cells: int = 2
    pyramid_levels: int = 2
    sample_cap: int = 20000
    seed: int = 0


@dataclass(frozen=True)
class MatrixResult:
    """All emitted tables; cell values are reported, never asserted."""

    by_metric: dict[str, dict[str, float]]          # feature -> metric -> mAP
    by_representation: dict[str, dict[str, float]]  # feature -> representation -> mAP
    by_fusion_rule: dict[str, float]                # rule -> mAP
    runs: dict[tuple, RunResult] = field(default_factory=dict)


def _rank_all(
    ids: Sequence[str],
    matrix: np.ndarray,
    query: np.ndarray,
    metric_name: str,
    exclude: set[str],
) -> ScoredList:
    scores = bulk_scores(metric_name, matrix, query)
    polarity = metric(metric_name).polarity
    if polarity == DISTANCE:
        order = sorted(range(len(ids)), key=lambda i: (scores[i], ids[i]))
    else:
        order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    entries = tuple((ids[i], float(scores[i])) for i in order if ids[i] not in exclude)
    return ScoredList(entries, polarity, source=metric_name)


def _representation_vectors(
    representation: str,
    features_by_image: dict,
    geometry: dict[str, tuple[int, int]],
    codebook,
    grid: ExperimentGrid,
) -> dict[str, np.ndarray]:
    out = {}
    for image_id, feats in features_by_image.items():
        if representation == "bovw":
            vec = describe_bovw(feats, codebook, "l2").values
        elif representation == "binary-bovw":
            vec = describe_binary_bovw(feats, codebook).as_float()
        elif representation == "grid-bovw":
            w, h = geometry[image_id]
            vec = describe_grid_bovw(w, h, feats, codebook, grid.grid_cells).values
        elif representation == "spm-bovw":
            w, h = geometry[image_id]
            vec = describe_spm_bovw(w, h, feats, codebook, grid.pyramid_levels).values
        elif representation == "vlad":
            vec = describe_vlad(feats, codebook).values
        else:
            raise InvalidParameter(f"unsupported representation in grid: {representation!r}")
        out[image_id] = vec
    return out


def _metric_for(representation: str, primary: str) -> str:
    if representation == "vlad":
        return "cosine"  # signed components; overlap measures do not apply
    if representation == "binary-bovw":
        return "hamming"
    return primary


def run_matrix_experiment(
    corpus: LabeledCorpus,
    topics: Mapping[str, Sequence[str]],
    qrels: Mapping[str, set[str]],
    grid: ExperimentGrid,
    out_dir: str | Path | None = None,
    workers: int = 4,
) -> MatrixResult:
    """Evaluate every grid cell and emit CSV tables.

    ``by_metric`` rows average the bovw runs over all vocabulary sizes,
    one column per measure; ``by_representation`` fixes the primary
    measure (with the representation-forced exceptions) and averages over
    vocabulary sizes; ``by_fusion_rule`` fuses each feature's best bovw
    run per topic.
    """
    if not grid.features or not grid.metrics:
        raise InvalidParameter("grid needs at least one feature and one metric")
    if not grid.vocab_sizes:
        raise MissingVocabulary("grid needs at least one vocabulary size")
    if not corpus.records:
        raise CorpusTooSmall("corpus is empty")

    images = {r.image_id: load_image(r.uri) for r in corpus.records}
    geometry = {i: (img.shape[1], img.shape[0]) for i, img in images.items()}

    # Extract once per feature; vocabulary training reuses the extraction.
    def extract_all(spec: FeatureSpec):
        return {
            image_id: extract_features(
                spec.extractor.feature, img, spec.extractor.grid_step, spec.extractor.patch_size
            )
            for image_id, img in sorted(images.items())
        }

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        features_per_spec = list(pool.map(extract_all, grid.features))

    def build_tables(args):
        f_idx, k = args
        feats = features_per_spec[f_idx]
        spec = grid.features[f_idx]
        stacked = np.vstack([f.descriptors for f in feats.values() if len(f)])
        if stacked.shape[0] < k:
            raise CorpusTooSmall(
                f"{stacked.shape[0]} local descriptors cannot train a k={k} vocabulary"
            )
        if stacked.shape[0] > grid.sample_cap:
            rng = np.random.default_rng(np.random.SeedSequence([grid.seed, f_idx, k]))
            pick = np.sort(rng.choice(stacked.shape[0], size=grid.sample_cap, replace=False))
            stacked = stacked[pick]
        codebook = train_kmeans(
            stacked, k, max_iters=50, seed=grid.seed + 7 * f_idx + k,
            feature_id=spec.extractor.feature,
        )
        vectors = {
            rep: _representation_vectors(rep, feats, geometry, codebook, grid)
            for rep in dict.fromkeys(("bovw",) + grid.representations)
        }
        return (f_idx, k), vectors

    cells = [(f_idx, k) for f_idx in range(len(grid.features)) for k in grid.vocab_sizes]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        tables = dict(pool.map(build_tables, cells))

    runs: dict[tuple, RunResult] = {}

    def run_topics(vecs: dict[str, np.ndarray], metric_name: str, tag: str) -> RunResult:
        ids = sorted(vecs)
        matrix = np.vstack([vecs[i] for i in ids])
        per_topic = {}
        for topic_id, query_ids in topics.items():
            query_vecs = [vecs[q] for q in query_ids if q in vecs]
            if not query_vecs:
                continue
            merged = sum(query_vecs[1:], start=query_vecs[0]) / len(query_vecs)
            if metric_name in ("chi2", "histogram-intersection"):
                merged = np.maximum(merged, 0.0)
            per_topic[topic_id] = _rank_all(ids, matrix, merged, metric_name, set(query_ids))
        return RunResult(per_topic, config=tag)

    by_metric: dict[str, dict[str, float]] = {}
    best_bovw_run: dict[str, RunResult] = {}
    for f_idx, spec in enumerate(grid.features):
        row = {}
        for metric_name in grid.metrics:
            maps = []
            for k in grid.vocab_sizes:
                run = run_topics(
                    tables[(f_idx, k)]["bovw"], metric_name,
                    tag=f"{spec.name}/bovw/k{k}/{metric_name}",
                )
                runs[(spec.name, "bovw", k, metric_name)] = run
                maps.append(mean_average_precision(run, qrels))
            row[metric_name] = sum(maps) / len(maps)
        by_metric[spec.name] = row
        primary = grid.metrics[0]
        candidates = [
            (mean_average_precision(runs[(spec.name, "bovw", k, primary)], qrels), k)
            for k in grid.vocab_sizes
        ]
        best_map, best_k = max(candidates, key=lambda c: (c[0], -c[1]))
        best_bovw_run[spec.name] = runs[(spec.name, "bovw", best_k, primary)]

    by_representation: dict[str, dict[str, float]] = {}
    for f_idx, spec in enumerate(grid.features):
        row = {}
        for rep in grid.representations:
            metric_name = _metric_for(rep, grid.metrics[0])
            maps = []
            for k in grid.vocab_sizes:
                run = run_topics(
                    tables[(f_idx, k)][rep], metric_name,
                    tag=f"{spec.name}/{rep}/k{k}/{metric_name}",
                )
                runs[(spec.name, rep, k, metric_name)] = run
                maps.append(mean_average_precision(run, qrels))
            row[rep] = sum(maps) / len(maps)
        by_representation[spec.name] = row

    by_fusion_rule: dict[str, float] = {}
    from .fusion import fuse  # late import; fusion has no other evaluation ties

    for rule in grid.fusion_rules:
        fused_topics = {}
        for topic_id in topics:
            lists = [
                r.topics[topic_id]
                for r in best_bovw_run.values()
                if topic_id in r.topics
            ]
            if lists:
                fused_topics[topic_id] = fuse(lists, rule)
        run = RunResult(fused_topics, config=f"fusion/{rule}")
        runs[("fusion", rule)] = run
        by_fusion_rule[rule] = mean_average_precision(run, qrels)

    result = MatrixResult(by_metric, by_representation, by_fusion_rule, runs)
    if out_dir is not None:
        _write_tables(Path(out_dir), grid, result)
    return result


def _write_tables(out_dir: Path, grid: ExperimentGrid, result: MatrixResult) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "by_metric.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature"] + list(grid.metrics))
        for spec in grid.features:
            row = result.by_metric[spec.name]
            writer.writerow([spec.name] + [f"{row[m]:.6f}" for m in grid.metrics])
    with open(out_dir / "by_representation.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature"] + list(grid.representations))
        for spec in grid.features:
            row = result.by_representation[spec.name]
            writer.writerow([spec.name] + [f"{row[r]:.6f}" for r in grid.representations])
    if result.by_fusion_rule:
        with open(out_dir / "by_fusion_rule.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rule", "mAP"])
            for rule, value in result.by_fusion_rule.items():
                writer.writerow([rule, f"{value:.6f}"])
