"""Retrieval evaluation: mAP over a feature/measure/vocabulary grid.

Reproduces the experiment structure on a synthetic labeled corpus:
features as rows, measures as columns, averaged over vocabulary sizes,
plus representation and fusion-rule tables.  Cell values depend on the
corpus; the harness reports them and never asserts orderings.
"""
import tempfile
from pathlib import Path

from imsearch.core import ExtractorParams
from imsearch.corpus import generate_corpus, make_topics
from imsearch.evaluation import ExperimentGrid, FeatureSpec, run_matrix_experiment


def main():
    workspace = Path(tempfile.mkdtemp(prefix="imsearch-demo-"))
    corpus = generate_corpus(workspace / "imgs", classes=4, per_class=8, size=48, seed=17)
    topics, qrels = make_topics(corpus, queries_per_class=2, seed=17)
    print(f"corpus: {len(corpus.records)} images, {len(topics)} topics")

    grid = ExperimentGrid(
        features=(
            FeatureSpec("dgrad", ExtractorParams("dense-gradient", 8, 16)),
            FeatureSpec("rootgrad", ExtractorParams("dense-gradient-root", 8, 16)),
            FeatureSpec("lab", ExtractorParams("lab", 8, 16)),
        ),
        vocab_sizes=(10, 20, 30),
        metrics=("histogram-intersection", "euclidean", "cosine", "chi2"),
        representations=("bovw", "spm-bovw", "grid-bovw", "vlad"),
        fusion_rules=("combMNZ", "combSUM", "rrf", "borda"),
        seed=17,
    )
    result = run_matrix_experiment(corpus, topics, qrels, grid, workspace / "tables")

    header = f"{'feature':10s} " + " ".join(f"{m:>22s}" for m in grid.metrics)
    print("\nmAP by measure (averaged over vocabulary sizes)")
    print(header)
    for spec in grid.features:
        row = result.by_metric[spec.name]
        print(f"{spec.name:10s} " + " ".join(f"{row[m]:22.4f}" for m in grid.metrics))

    print("\nmAP by representation")
    print(f"{'feature':10s} " + " ".join(f"{r:>10s}" for r in grid.representations))
    for spec in grid.features:
        row = result.by_representation[spec.name]
        print(f"{spec.name:10s} " + " ".join(f"{row[r]:10.4f}" for r in grid.representations))

    print("\nmAP of fusing each feature's best run")
    for rule, value in result.by_fusion_rule.items():
        print(f"  {rule:8s} {value:.4f}")

    print(f"\nCSV tables written under {workspace / 'tables'}")


if __name__ == "__main__":
    main()
