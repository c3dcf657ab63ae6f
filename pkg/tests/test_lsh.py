"""Locality-sensitive hashing index."""
import numpy as np
import pytest

from imsearch.errors import DimensionMismatch, InvalidParameter
from imsearch.lsh import LshIndex, LshParams, estimate_bucket_width


def blob_data(rng, blobs=4, per_blob=50, dim=6, spread=60.0, sigma=1.0):
    centers = rng.uniform(0, spread, size=(blobs, dim))
    vectors = {}
    for b in range(blobs):
        for i in range(per_blob):
            vectors[f"b{b}-{i:03d}"] = centers[b] + rng.normal(scale=sigma, size=dim)
    return vectors, centers


class TestParams:
    def test_invariants(self):
        with pytest.raises(InvalidParameter):
            LshParams(0, 8, 1.0, 0, 4)
        with pytest.raises(InvalidParameter):
            LshParams(2, 8, 0.0, 0, 4)
        with pytest.raises(InvalidParameter):
            LshParams(2, 8, 1.0, -1, 4)


class TestBuild:
    def test_identical_vectors_share_bucket_keys(self, rng):
        v = rng.normal(size=8)
        params = LshParams(5, 4, 2.0, 7, 8)
        index = LshIndex.build({"a": v, "b": v.copy()}, params)
        assert index.keys_for(v) == index.keys_for(v.copy())
        for fp, table in zip(index.keys_for(v), index._tables):
            assert sorted(table[fp]) == [0, 1]

    def test_single_vector_present_once_per_table(self, rng):
        params = LshParams(6, 3, 1.0, 1, 4)
        index = LshIndex.build({"only": rng.normal(size=4)}, params)
        for table in index._tables:
            assert sum(len(rows) for rows in table.values()) == 1

    def test_far_vectors_rarely_collide(self, rng):
        # points much farther apart than w * k
        params = LshParams(20, 8, 1.0, 3, 4)
        vectors = {f"v{i}": rng.uniform(0, 5000.0, size=4) for i in range(60)}
        index = LshIndex.build(vectors, params)
        collisions = 0
        pairs = 0
        for table in index._tables:
            for rows in table.values():
                collisions += len(rows) * (len(rows) - 1) // 2
            pairs += 60 * 59 // 2
        assert collisions / pairs < 0.05

    def test_build_determinism(self, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(8, 4, 4.0, 11, 6)
        a = LshIndex.build(vectors, params)
        b = LshIndex.build(vectors, params)
        assert a.ids == b.ids
        assert a._tables == b._tables

    def test_parallel_build_equals_serial(self, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(8, 4, 4.0, 11, 6)
        serial = LshIndex.build(vectors, params, workers=1)
        parallel = LshIndex.build(vectors, params, workers=4)
        assert serial._tables == parallel._tables

    def test_dimension_mismatch(self, rng):
        params = LshParams(2, 2, 1.0, 0, 5)
        with pytest.raises(DimensionMismatch):
            LshIndex.build({"a": rng.normal(size=4)}, params)


class TestShortlist:
    def test_indexed_vector_is_in_own_shortlist(self, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(10, 4, 4.0, 2, 6)
        index = LshIndex.build(vectors, params)
        for image_id in list(vectors)[:20]:
            assert image_id in index.shortlist(vectors[image_id])

    def test_empty_index_empty_shortlist(self, rng):
        params = LshParams(3, 2, 1.0, 0, 4)
        index = LshIndex.build({}, params)
        assert index.shortlist(rng.normal(size=4)) == set()

    def test_soundness(self, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(10, 4, 4.0, 2, 6)
        index = LshIndex.build(vectors, params)
        for _ in range(20):
            probe = rng.normal(size=6) * 30
            assert index.shortlist(probe) <= set(vectors)

    def test_monotone_in_table_count(self, rng):
        vectors, _ = blob_data(rng)
        small = LshIndex.build(vectors, LshParams(5, 4, 4.0, 9, 6))
        large = LshIndex.build(vectors, LshParams(12, 4, 4.0, 9, 6))
        for image_id in list(vectors)[:10]:
            assert small.shortlist(vectors[image_id]) <= large.shortlist(vectors[image_id])

    def test_recall_on_clustered_data(self, rng):
        # small-scale version of the recall contract (the full-size run
        # lives in the acceptance suite)
        vectors, _ = blob_data(rng, blobs=5, per_blob=100, dim=4, spread=300.0)
        matrix_ids = sorted(vectors)
        params = LshParams(20, 8, 4.0, 5, 4)
        index = LshIndex.build(vectors, params)

        recalls = []
        for query_id in matrix_ids[::25]:
            query = vectors[query_id]
            exact = sorted(
                matrix_ids, key=lambda i: (float(np.sum((vectors[i] - query) ** 2)), i)
            )[:10]
            short = index.shortlist(query)
            reranked = sorted(
                short, key=lambda i: (float(np.sum((vectors[i] - query) ** 2)), i)
            )[:10]
            recalls.append(len(set(exact) & set(reranked)) / 10)
        assert sum(recalls) / len(recalls) >= 0.8


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(6, 3, 4.0, 13, 6)
        index = LshIndex.build(vectors, params)
        index.save(tmp_path / "lsh")
        loaded = LshIndex.load(tmp_path / "lsh")
        assert loaded.params == params
        assert loaded.ids == index.ids
        for image_id in list(vectors)[:15]:
            assert loaded.shortlist(vectors[image_id]) == index.shortlist(vectors[image_id])

    def test_save_is_byte_deterministic(self, tmp_path, rng):
        vectors, _ = blob_data(rng)
        params = LshParams(4, 3, 4.0, 13, 6)
        LshIndex.build(vectors, params).save(tmp_path / "a")
        LshIndex.build(vectors, params).save(tmp_path / "b")
        for name in ("params.json", "ids.json", "tables.bin"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestWidthEstimate:
    def test_positive_and_scaled(self, rng):
        matrix = rng.normal(size=(200, 4)) * 10
        width = estimate_bucket_width(matrix, sample=100, seed=1)
        assert width > 0
        assert estimate_bucket_width(matrix * 2, sample=100, seed=1) == pytest.approx(
            2 * width, rel=1e-9
        )

    def test_degenerate_inputs(self):
        assert estimate_bucket_width(np.zeros((1, 3))) == 1.0
        assert estimate_bucket_width(np.zeros((5, 3))) == 1.0
