"""Vector storage backends and scans."""
import numpy as np
import pytest

from imsearch.core import DescriptorVector
from imsearch.errors import (
    DimensionMismatch,
    DuplicateId,
    IndexNotFound,
    InvalidParameter,
    UnknownMetric,
)
from imsearch.measures import metric
from imsearch.store import BinaryStore, CsvStore, create_store, open_store

BACKENDS = ("csv", "binary")


def path_for(backend, tmp_path, name="vectors"):
    return tmp_path / f"{name}.{'csv' if backend == 'csv' else 'bin'}"


@pytest.mark.parametrize("backend", BACKENDS)
class TestRoundTrip:
    def test_insert_then_get(self, backend, tmp_path, rng):
        store = create_store(backend, path_for(backend, tmp_path), "feat", 6)
        vector = rng.normal(size=6)
        store.insert("img1", vector)
        got = store.get("img1")
        assert np.array_equal(got, vector.astype(np.float32))
        store.close()

    def test_reopen_round_trip(self, backend, tmp_path, rng):
        path = path_for(backend, tmp_path)
        vectors = {f"img{i:02d}": rng.normal(size=5) for i in range(20)}
        with create_store(backend, path, "feat", 5) as store:
            for image_id, vector in vectors.items():
                store.insert(image_id, vector)
        reopened = open_store(backend, path)
        assert reopened.feature_id == "feat"
        assert len(reopened) == 20
        for image_id, vector in vectors.items():
            stored = vector.astype(np.float32)
            if backend == "binary":
                assert np.array_equal(reopened.get(image_id), stored)
            else:
                assert np.allclose(reopened.get(image_id), stored, atol=1e-6)

    def test_csv_round_trip_is_actually_exact(self, backend, tmp_path, rng):
        # repr-based decimals recover the float32 values bit for bit
        path = path_for(backend, tmp_path)
        with create_store(backend, path, "feat", 4) as store:
            vector = rng.normal(size=4) * 1e-3
            store.insert("a", vector)
        assert np.array_equal(open_store(backend, path).get("a"), vector.astype(np.float32))

    def test_dimension_mismatch(self, backend, tmp_path):
        store = create_store(backend, path_for(backend, tmp_path), "feat", 4)
        with pytest.raises(DimensionMismatch):
            store.insert("img1", np.zeros(5))

    def test_duplicate_id_rejected(self, backend, tmp_path):
        store = create_store(backend, path_for(backend, tmp_path), "feat", 3)
        store.insert("img1", np.zeros(3))
        with pytest.raises(DuplicateId):
            store.insert("img1", np.ones(3))

    def test_feature_id_mismatch_rejected(self, backend, tmp_path):
        store = create_store(backend, path_for(backend, tmp_path), "feat", 3)
        with pytest.raises(InvalidParameter):
            store.insert("img1", DescriptorVector("other", np.zeros(3)))

    def test_missing_file(self, backend, tmp_path):
        with pytest.raises(IndexNotFound):
            open_store(backend, path_for(backend, tmp_path, "absent"))


class TestBulkInserts:
    def test_ten_thousand_round_trip(self, tmp_path, rng):
        path = tmp_path / "big.bin"
        ids = [f"im{i:05d}" for i in range(10_000)]
        matrix = rng.normal(size=(10_000, 8)).astype(np.float32)
        with BinaryStore.create(path, "feat", 8) as store:
            for i, image_id in enumerate(ids):
                store.insert(image_id, matrix[i].astype(np.float64))
        reopened = BinaryStore.open(path)
        assert len(reopened) == 10_000
        assert sorted(reopened.ids()) == sorted(ids)
        seen = {image_id for image_id, _ in reopened.items()}
        assert seen == set(ids)
        assert np.array_equal(reopened.matrix(), matrix)


class TestScan:
    @pytest.fixture
    def store(self, tmp_path, rng):
        store = create_store("binary", tmp_path / "v.bin", "feat", 6)
        self.vectors = {f"img{i:03d}": rng.normal(size=6) for i in range(200)}
        for image_id, vector in self.vectors.items():
            store.insert(image_id, vector)
        return store

    def test_self_query_first_with_zero_distance(self, store):
        query = store.get("img007").astype(np.float64)
        scored = store.scan(query, "euclidean", top_n=5)
        assert scored.entries[0] == ("img007", 0.0)
        assert scored.polarity == "distance"

    def test_empty_shortlist_empty_result(self, store):
        scored = store.scan(np.zeros(6), "euclidean", shortlist=set(), top_n=10)
        assert len(scored) == 0

    def test_top10_matches_brute_force_sort(self, store, rng):
        m = metric("euclidean")
        query = rng.normal(size=6)
        scored = store.scan(query, "euclidean", top_n=10)
        brute = sorted(
            ((i, m.func(store.get(i).astype(np.float64), query)) for i in store.ids()),
            key=lambda e: (e[1], e[0]),
        )[:10]
        assert [i for i, _ in scored.entries] == [i for i, _ in brute]
        assert np.allclose([s for _, s in scored.entries], [s for _, s in brute], rtol=1e-12)

    def test_similarity_polarity_ordering(self, tmp_path, rng):
        store = create_store("binary", tmp_path / "nn.bin", "feat", 6)
        for i in range(100):
            store.insert(f"img{i:03d}", rng.uniform(0, 1, size=6))
        query = rng.uniform(0, 1, size=6)
        scored = store.scan(query, "histogram-intersection", top_n=20)
        assert scored.polarity == "similarity"
        values = [s for _, s in scored.entries]
        assert values == sorted(values, reverse=True)

    def test_shortlist_equals_index_restricted_to_members(self, store, rng, tmp_path):
        members = set(list(self.vectors)[::7])
        query = rng.normal(size=6)
        via_shortlist = store.scan(query, "manhattan", shortlist=members, top_n=None)

        only = create_store("binary", tmp_path / "only.bin", "feat", 6)
        for image_id in members:
            only.insert(image_id, store.get(image_id).astype(np.float64))
        direct = only.scan(query, "manhattan", top_n=None)
        assert via_shortlist.entries == direct.entries

    def test_shortlist_ignores_unknown_ids(self, store, rng):
        scored = store.scan(
            rng.normal(size=6), "euclidean", shortlist={"img000", "ghost"}, top_n=None
        )
        assert scored.ids() == ("img000",)

    def test_insertion_order_invariance(self, tmp_path, rng):
        vectors = [(f"v{i}", rng.normal(size=4)) for i in range(50)]
        a = create_store("binary", tmp_path / "a.bin", "feat", 4)
        for image_id, vector in vectors:
            a.insert(image_id, vector)
        b = create_store("binary", tmp_path / "b.bin", "feat", 4)
        for image_id, vector in reversed(vectors):
            b.insert(image_id, vector)
        query = rng.normal(size=4)
        assert a.scan(query, "euclidean").entries == b.scan(query, "euclidean").entries

    def test_unknown_metric(self, store):
        with pytest.raises(UnknownMetric):
            store.scan(np.zeros(6), "no-such-metric")

    def test_query_dimension_checked(self, store):
        with pytest.raises(DimensionMismatch):
            store.scan(np.zeros(5), "euclidean")


class TestCsvFormat:
    def test_header_row_layout(self, tmp_path):
        path = tmp_path / "v.csv"
        with CsvStore.create(path, "feat", 3) as store:
            store.insert("a", np.array([1.0, 2.0, 3.0]))
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "imageId,v0,v1,v2"
        assert lines[1].startswith("a,")

    def test_meta_sidecar(self, tmp_path):
        path = tmp_path / "v.csv"
        with CsvStore.create(path, "feat", 2) as store:
            store.insert("a", np.zeros(2))
        meta = path.with_suffix(".csv.meta.json")
        assert meta.is_file()
        assert '"count": 1' in meta.read_text(encoding="utf-8")
