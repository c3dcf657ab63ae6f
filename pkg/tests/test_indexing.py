"""Indexing pipeline: reports, failures, determinism, merging."""
import json

import numpy as np
import pytest

from imsearch.core import (
    DescriptorParams,
    ExtractorParams,
    ImageRecord,
    IndexConfig,
    StorerParams,
    WeightingParams,
    load_config,
)
from imsearch.corpus import generate_corpus
from imsearch.errors import ConfigInvalid
from imsearch.extract import extract_dense_gradient
from imsearch.indexing import (
    IndexJob,
    index_digest,
    load_image,
    merge_segments,
    run_index,
)
from imsearch.store import open_store
from imsearch.vocab import save_codebook, train_kmeans


def hsv_config(backend="binary"):
    return IndexConfig(
        descriptor=DescriptorParams(representation="hsv-hist"),
        storer=StorerParams(backend, "vectors.bin" if backend == "binary" else "vectors.csv"),
        distance_default="histogram-intersection",
    )


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return generate_corpus(tmp_path_factory.mktemp("imgs"), classes=4, per_class=5, size=32)


class TestRunIndex:
    def test_serial_report_conservation(self, corpus, tmp_path):
        job = IndexJob(corpus.records, hsv_config(), tmp_path / "idx")
        report = run_index(job)
        assert (report.indexed, report.failed) == (20, 0)
        store = open_store("binary", tmp_path / "idx" / "vectors.bin")
        assert len(store) == 20
        assert (tmp_path / "idx" / "report.json").is_file()
        assert (tmp_path / "idx" / "config.json").is_file()

    def test_corrupt_files_reported_not_fatal(self, corpus, tmp_path):
        bad_a = tmp_path / "broken-a.png"
        bad_a.write_bytes(b"\x89PNG\r\n but truncated")
        bad_b = tmp_path / "broken-b.png"
        bad_b.write_bytes(b"not an image at all")
        records = corpus.records + (
            ImageRecord("bad-a", str(bad_a)),
            ImageRecord("bad-b", str(bad_b)),
            ImageRecord("gone", str(tmp_path / "missing.png")),
        )
        report = run_index(IndexJob(records, hsv_config(), tmp_path / "idx"))
        assert report.indexed == 20
        assert report.failed == 3
        failed_ids = {image_id for image_id, _ in report.failures}
        assert failed_ids == {"bad-a", "bad-b", "gone"}
        for _, reason in report.failures:
            assert reason  # a reason string is always recorded

    def test_duplicate_ids_rejected(self, corpus, tmp_path):
        records = corpus.records + (corpus.records[0],)
        with pytest.raises(ConfigInvalid):
            run_index(IndexJob(records, hsv_config(), tmp_path / "dup"))

    def test_serial_parallel_and_shard_sizes_byte_identical(self, corpus, tmp_path):
        digests = set()
        for i, (workers, shard) in enumerate([(1, 50), (4, 50), (8, 50), (4, 1), (1, 1)]):
            out = tmp_path / f"run{i}"
            run_index(IndexJob(corpus.records, hsv_config(), out, workers, shard))
            digests.add(index_digest(out))
        assert len(digests) == 1

    def test_records_written_sorted(self, corpus, tmp_path):
        run_index(IndexJob(corpus.records, hsv_config(), tmp_path / "idx"))
        lines = (tmp_path / "idx" / "records.jsonl").read_text().splitlines()
        ids = [json.loads(line)["imageId"] for line in lines]
        assert ids == sorted(ids)
        assert len(ids) == 20

    def test_manifest_shape(self, corpus, tmp_path):
        run_index(IndexJob(corpus.records, hsv_config(), tmp_path / "idx", shard_size=7))
        lines = (tmp_path / "idx" / "manifest.jsonl").read_text().splitlines()
        rows = [json.loads(line) for line in lines]
        assert [r["shardId"] for r in rows] == list(range(3))
        assert sum(len(r["imageIds"]) for r in rows) == 20


class TestFaultInjection:
    def test_transient_fault_retried_once(self, corpus, tmp_path):
        seen = set()

        def fail_first_time(shard_id):
            if shard_id == 1 and shard_id not in seen:
                seen.add(shard_id)
                raise RuntimeError("simulated worker crash")

        job = IndexJob(corpus.records, hsv_config(), tmp_path / "idx", shard_size=5)
        report = run_index(job, _shard_fault=fail_first_time)
        assert report.failed == 0
        assert report.indexed == 20

    def test_persistent_fault_reports_shard_failure(self, corpus, tmp_path):
        def always_fail(shard_id):
            if shard_id == 2:
                raise RuntimeError("hardware gremlin")

        job = IndexJob(corpus.records, hsv_config(), tmp_path / "idx", shard_size=5)
        report = run_index(job, _shard_fault=always_fail)
        assert report.failed == 5
        assert report.indexed == 15
        for _, reason in report.failures:
            assert "WorkerPanic" in reason and "shard 2" in reason


class TestVocabularyIndexes:
    def make_bovw_config(self, corpus, tmp_path, weighting="none", ann=None, k=6):
        blocks = []
        for record in corpus.records[:8]:
            feats = extract_dense_gradient(load_image(record.uri), 8, 16)
            blocks.append(feats.descriptors)
        codebook = train_kmeans(np.vstack(blocks), k=k, seed=3, feature_id="dense-gradient")
        cb_path = tmp_path / "cb.bin"
        save_codebook(codebook, cb_path)
        scheme = WeightingParams(weighting) if weighting != "frequent-items" else WeightingParams(weighting, k=3)
        distance = {
            "none": "histogram-intersection",
            "tfidf": "histogram-intersection",
            "frequent-items": "frequent-item",
        }[weighting]
        return IndexConfig(
            descriptor=DescriptorParams(
                representation="bovw",
                vocab_ref=str(cb_path),
                normalization="none" if weighting != "none" else "l2",
            ),
            extractor=ExtractorParams("dense-gradient", 8, 16),
            weighting=scheme,
            ann=ann,
            distance_default=distance,
        )

    def test_codebook_copied_and_config_relative(self, corpus, tmp_path):
        config = self.make_bovw_config(corpus, tmp_path)
        out = tmp_path / "idx"
        run_index(IndexJob(corpus.records, config, out))
        assert (out / "codebook.bin").is_file()
        stored = load_config(out / "config.json")  # resolves vocab ref
        assert stored.descriptor.vocab_ref == "codebook.bin"

    def test_tfidf_weighted_sibling_index(self, corpus, tmp_path):
        config = self.make_bovw_config(corpus, tmp_path, weighting="tfidf")
        out = tmp_path / "idx"
        run_index(IndexJob(corpus.records, config, out))
        assert (out / "stats.json").is_file()
        raw = open_store("binary", out / "vectors.bin")
        weighted = open_store("binary", out / "weighted" / "vectors.bin")
        assert len(raw) == len(weighted) == 20
        assert weighted.feature_id.startswith("tfidf:")

    def test_frequent_items_artifacts(self, corpus, tmp_path):
        config = self.make_bovw_config(corpus, tmp_path, weighting="frequent-items")
        out = tmp_path / "idx"
        run_index(IndexJob(corpus.records, config, out))
        lines = (out / "frequent_items.jsonl").read_text().splitlines()
        assert len(lines) == 20
        for line in lines:
            row = json.loads(line)
            assert row["items"] == sorted(row["items"])
            assert len(row["items"]) <= 3


class TestMerge:
    def test_two_segments_merge(self, corpus, tmp_path):
        first, second = corpus.records[:10], corpus.records[10:]
        run_index(IndexJob(first, hsv_config(), tmp_path / "seg1"))
        run_index(IndexJob(second, hsv_config(), tmp_path / "seg2"))
        report = merge_segments([tmp_path / "seg1", tmp_path / "seg2"], tmp_path / "merged")
        assert report.indexed == 20
        merged = open_store("binary", tmp_path / "merged" / "vectors.bin")
        full = tmp_path / "full"
        run_index(IndexJob(corpus.records, hsv_config(), full))
        assert index_digest(tmp_path / "merged") == index_digest(full)
        assert len(merged) == 20

    def test_mismatched_configs_rejected(self, corpus, tmp_path):
        run_index(IndexJob(corpus.records[:5], hsv_config(), tmp_path / "seg1"))
        other = IndexConfig(
            descriptor=DescriptorParams(representation="color-layout"),
            distance_default="euclidean",
        )
        run_index(IndexJob(corpus.records[5:10], other, tmp_path / "seg2"))
        with pytest.raises(ConfigInvalid):
            merge_segments([tmp_path / "seg1", tmp_path / "seg2"], tmp_path / "merged")
