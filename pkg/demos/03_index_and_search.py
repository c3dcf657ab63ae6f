"""Index a corpus, then search it with relevance feedback.

Shows the offline/online split: a parallel indexing job writes a
self-contained index directory; seekers then answer query-by-example
searches with positive/negative feedback, ANN shortlists and modality
filters.
"""
import tempfile
from pathlib import Path

from imsearch.core import AnnParams, DescriptorParams, IndexConfig, StorerParams
from imsearch.corpus import generate_corpus
from imsearch.indexing import IndexJob, index_digest, load_image, run_index
from imsearch.seek import (
    IndexHandle,
    QuerySpec,
    RocchioParams,
    search_late_fusion,
    search_modality_filtered,
    search_rocchio,
)


def main():
    workspace = Path(tempfile.mkdtemp(prefix="imsearch-demo-"))
    corpus = generate_corpus(workspace / "imgs", classes=5, per_class=10, size=32, seed=6)
    config = IndexConfig(
        descriptor=DescriptorParams(representation="hsv-hist"),
        storer=StorerParams("binary", "vectors.bin"),
        ann=AnnParams(tables=12, hashes=4, bucket_width=None, seed=8),
        distance_default="histogram-intersection",
    )
    job = IndexJob(corpus.records, config, workspace / "idx", workers=4, shard_size=10)
    report = run_index(job)
    print(f"indexed {report.indexed} images ({report.failed} failures) "
          f"into {workspace / 'idx'}")
    print(f"artifact digest: {index_digest(workspace / 'idx')[:16]}...")

    handle = IndexHandle(workspace / "idx")
    query_record = corpus.records[0]
    image = load_image(query_record.uri)

    top = search_rocchio(handle, QuerySpec(positives=(image,), top_n=5))
    print(f"\nquery by example ({query_record.image_id}):")
    for rank, (image_id, score) in enumerate(top.entries, 1):
        print(f"  {rank}. {image_id}  score {score:.4f}  class {corpus.labels[image_id]}")

    # relevance feedback: promote a neighbor, demote an off-class image
    feedback = QuerySpec(
        positives=(query_record.image_id, top.entries[1][0]),
        negatives=(corpus.records[-1].image_id,),
        top_n=5,
    )
    refined = search_rocchio(handle, feedback, RocchioParams(0.0, 0.6, 0.4))
    print("\nafter one feedback iteration (beta=0.6, gamma=0.4):")
    for rank, (image_id, score) in enumerate(refined.entries, 1):
        print(f"  {rank}. {image_id}  score {score:.4f}  class {corpus.labels[image_id]}")

    fused = search_late_fusion(
        handle,
        QuerySpec(positives=(corpus.records[0].image_id, corpus.records[1].image_id), top_n=5),
        rule="combMNZ",
    )
    print("\nlate fusion over two positives (combMNZ):")
    for rank, (image_id, score) in enumerate(fused.entries, 1):
        print(f"  {rank}. {image_id}  score {score:.4f}")

    modality = corpus.records[0].modality
    filtered = search_modality_filtered(
        handle, QuerySpec(positives=(image,), modalities={modality}, top_n=5)
    )
    print(f"\nmodality-filtered to {modality!r}:")
    for rank, (image_id, _) in enumerate(filtered.entries, 1):
        print(f"  {rank}. {image_id}  modality {handle.records[image_id].modality}")


if __name__ == "__main__":
    main()
