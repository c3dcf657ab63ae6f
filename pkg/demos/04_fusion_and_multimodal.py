"""Rank fusion rules and the text + visual composition.

Fuses ranked lists under all seven rules, then runs the multimodal
pipeline: caption text search produces a shortlist for the visual
searches, visual indices fuse with combMNZ, and the text list joins via
reciprocal rank fusion.
"""
import tempfile
from pathlib import Path

from imsearch.core import DescriptorParams, IndexConfig, ScoredList, StorerParams
from imsearch.corpus import generate_corpus
from imsearch.fusion import RULES, FusionRule, fuse
from imsearch.indexing import IndexJob, load_image, run_index
from imsearch.seek import IndexHandle, QuerySpec, search_modality_filtered
from imsearch.text import fuse_multimodal, index_captions, search_text


def main():
    engine_a = ScoredList.from_pairs(
        [("img1", 0.91), ("img2", 0.58), ("img3", 0.40), ("img4", 0.12)], source="engineA"
    )
    engine_b = ScoredList.from_pairs(
        [("img3", 3.1), ("img1", 2.2), ("img5", 1.7)], source="engineB"
    )
    print("two engines disagree:")
    print("  A:", engine_a.ids())
    print("  B:", engine_b.ids())
    for name in RULES:
        rule = FusionRule(name, weights=(0.7, 0.3) if name == "linear" else None)
        fused = fuse([engine_a, engine_b], rule, top_n=5)
        print(f"  {name:8s} ->", [f"{i}:{s:.3f}" for i, s in fused.entries])

    # multimodal: captions + two visual indices
    workspace = Path(tempfile.mkdtemp(prefix="imsearch-demo-"))
    corpus = generate_corpus(workspace / "imgs", classes=4, per_class=8, size=32, seed=2)
    for name, rep, metric in (
        ("color", "hsv-hist", "histogram-intersection"),
        ("layout", "color-layout", "euclidean"),
    ):
        config = IndexConfig(
            descriptor=DescriptorParams(representation=rep),
            storer=StorerParams("binary", "vectors.bin"),
            distance_default=metric,
        )
        run_index(IndexJob(corpus.records, config, workspace / name))
    handles = {n: IndexHandle(workspace / n) for n in ("color", "layout")}

    query = corpus.records[5]
    text_index = index_captions(handles["color"].records.values())
    text_list = search_text(query.caption, text_index, top_n=1000)
    print(f"\ntext query {query.caption!r}: {len(text_list)} caption hits")

    image = load_image(query.uri)
    spec = QuerySpec(positives=(image,), top_n=1000)
    visual = [
        search_modality_filtered(handles[n], spec, shortlist=set(text_list.ids()))
        for n in ("color", "layout")
    ]
    final = fuse_multimodal(text_list, visual, top_n=5)
    print("multimodal top-5 (combMNZ across indices, then reciprocal rank with text):")
    for rank, (image_id, score) in enumerate(final.entries, 1):
        print(f"  {rank}. {image_id}  score {score:.5f}")


if __name__ == "__main__":
    main()
