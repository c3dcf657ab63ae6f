"""Component registry, scored lists and config serialization."""
import json
import random

import numpy as np
import pytest

import imsearch  # noqa: F401  (registers components)
from imsearch.core import (
    AnnParams,
    DescriptorParams,
    ExtractorParams,
    IndexConfig,
    ScoredList,
    StorerParams,
    WeightingParams,
    load_config,
    save_config,
    select_component,
)
from imsearch.errors import InvalidParameter, MalformedConfig, UnknownComponent
from imsearch.vocab import Codebook, save_codebook


def make_codebook(k=10, d=128):
    rng = np.random.default_rng(3)
    return Codebook(rng.normal(size=(k, d)), "dense-gradient", seed=3)


class TestSelectComponent:
    def test_fusor_instance(self):
        fusor = select_component("fusor", "combMNZ", {})
        lists = [ScoredList.from_pairs([("a", 1.0), ("b", 0.5)])]
        assert fusor.fuse(lists).ids() == ("a", "b")

    def test_bovw_output_length_equals_vocabulary_size(self):
        descriptor = select_component("descriptor", "bovw", {"vocab": make_codebook(k=10)})
        assert descriptor.length == 10

    def test_unknown_name(self):
        with pytest.raises(UnknownComponent):
            select_component("fusor", "nonexistent", {})

    def test_unknown_kind(self):
        with pytest.raises(UnknownComponent):
            select_component("gadget", "combMNZ", {})

    def test_unknown_parameter_key_rejected(self):
        with pytest.raises(InvalidParameter):
            select_component("fusor", "rrf", {"constant": 60})

    def test_parameter_type_violation(self):
        with pytest.raises(InvalidParameter):
            select_component("extractor", "lab", {"gridStep": "eight"})

    def test_parameter_range_violation(self):
        with pytest.raises(InvalidParameter):
            select_component("extractor", "lab", {"patchSize": 7})

    def test_missing_required_parameter(self):
        with pytest.raises(InvalidParameter):
            select_component("descriptor", "bovw", {})

    def test_reselection_behaviorally_identical(self):
        lists = [
            ScoredList.from_pairs([("a", 0.9), ("b", 0.4), ("c", 0.1)]),
            ScoredList.from_pairs([("b", 0.8), ("c", 0.7)]),
        ]
        first = select_component("fusor", "borda", {}).fuse(lists)
        second = select_component("fusor", "borda", {}).fuse(lists)
        assert first.entries == second.entries

        metric_a = select_component("metric", "euclidean", {})
        metric_b = select_component("metric", "euclidean", {})
        assert metric_a.func([0, 0], [3, 4]) == metric_b.func([0, 0], [3, 4]) == 5.0


class TestScoredList:
    def test_sorted_and_unique_enforced(self):
        with pytest.raises(InvalidParameter):
            ScoredList((("a", 0.1), ("b", 0.9)), "similarity")
        with pytest.raises(InvalidParameter):
            ScoredList((("a", 0.9), ("a", 0.1)), "similarity")
        with pytest.raises(InvalidParameter):
            ScoredList((), "rank")

    def test_from_pairs_sorts_best_first(self):
        similarity = ScoredList.from_pairs([("a", 0.2), ("b", 0.9)], "similarity")
        assert similarity.ids() == ("b", "a")
        distance = ScoredList.from_pairs([("a", 2.0), ("b", 0.5)], "distance")
        assert distance.ids() == ("b", "a")

    def test_tie_break_by_image_id(self):
        scored = ScoredList.from_pairs([("z", 1.0), ("a", 1.0)], "similarity")
        assert scored.ids() == ("a", "z")

    def test_distance_to_similarity_conversion(self):
        distance = ScoredList.from_pairs([("a", 0.0), ("b", 1.0), ("c", 3.0)], "distance")
        converted = distance.to_similarity()
        assert converted.polarity == "similarity"
        assert converted.as_dict() == {"a": 1.0, "b": 0.5, "c": 0.25}
        assert converted.ids() == distance.ids()

    def test_truncated_and_rank_of(self):
        scored = ScoredList.from_pairs([("a", 3.0), ("b", 2.0), ("c", 1.0)])
        assert scored.truncated(2).ids() == ("a", "b")
        assert scored.rank_of("b") == 2
        assert scored.rank_of("missing") is None


# ---------------------------------------------------------------------------
# Config serialization
# ---------------------------------------------------------------------------

GLOBAL_REPS = ("hsv-hist", "hog-mini", "gabor", "color-layout")
VOCAB_REPS = ("bovw", "binary-bovw", "grid-bovw", "spm-bovw", "vlad")
PLAIN_DISTANCES = (
    "euclidean", "manhattan", "canberra", "chi2", "jeffrey",
    "jeffrey-standard", "histogram-intersection", "cosine",
)


def random_config(rnd: random.Random) -> IndexConfig:
    rep = rnd.choice(GLOBAL_REPS + VOCAB_REPS)
    extractor = None
    vocab_ref = None
    weighting = WeightingParams("none")
    distance = rnd.choice(PLAIN_DISTANCES)
    normalization = rnd.choice(("none", "l1", "l2"))
    if rep in VOCAB_REPS:
        feature = rnd.choice(("dense-gradient", "dense-gradient-root", "lab"))
        extractor = ExtractorParams(
            feature=feature,
            grid_step=rnd.choice((4, 8, 16)),
            patch_size=rnd.choice((8, 16, 24)),
        )
        vocab_ref = f"codebook-{rnd.randint(0, 99)}.bin"
        if rep == "binary-bovw":
            distance = "hamming"
        elif rep == "bovw" and rnd.random() < 0.4:
            scheme = rnd.choice(("tfidf", "frequent-items"))
            normalization = "none"
            if scheme == "frequent-items":
                weighting = WeightingParams(scheme, k=rnd.randint(1, 20))
                distance = "frequent-item"
            else:
                weighting = WeightingParams(scheme)
    ann = None
    if weighting.scheme != "frequent-items" and rnd.random() < 0.5:
        ann = AnnParams(
            tables=rnd.randint(1, 30),
            hashes=rnd.randint(1, 12),
            bucket_width=rnd.choice((None, rnd.uniform(0.1, 8.0))),
            seed=rnd.randint(0, 10_000),
        )
    backend = rnd.choice(("csv", "binary"))
    return IndexConfig(
        descriptor=DescriptorParams(
            representation=rep,
            vocab_ref=vocab_ref,
            grid_cells=rnd.randint(1, 4) if rep == "grid-bovw" else None,
            pyramid_levels=rnd.randint(1, 3) if rep == "spm-bovw" else None,
            normalization=normalization,
            options=(("binsH", 8), ("binsS", 4)) if rep == "hsv-hist" else (),
        ),
        extractor=extractor,
        weighting=weighting,
        ann=ann,
        storer=StorerParams(backend, f"vectors.{'csv' if backend == 'csv' else 'bin'}"),
        distance_default=distance,
    )


class TestConfigRoundTrip:
    def test_hundred_randomized_configs(self, tmp_path):
        rnd = random.Random(424242)
        for i in range(100):
            config = random_config(rnd)
            path = tmp_path / f"config-{i}.json"
            save_config(config, path)
            loaded = load_config(path, resolve=False)
            assert loaded == config, f"round trip changed config {i}"

    def test_dict_round_trip_is_identity(self):
        rnd = random.Random(7)
        for _ in range(50):
            config = random_config(rnd)
            assert IndexConfig.from_dict(config.to_dict()) == config

    def test_missing_descriptor_params_is_malformed(self, tmp_path):
        config = random_config(random.Random(1))
        raw = config.to_dict()
        del raw["descriptorParams"]
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(raw), encoding="utf-8")
        with pytest.raises(MalformedConfig):
            load_config(path)

    def test_invalid_json_is_malformed(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(MalformedConfig):
            load_config(path)

    def test_unknown_major_version_rejected(self, tmp_path):
        config = random_config(random.Random(2))
        raw = config.to_dict()
        raw["version"] = "2.0"
        path = tmp_path / "future.json"
        path.write_text(json.dumps(raw), encoding="utf-8")
        with pytest.raises(MalformedConfig):
            load_config(path)

    def test_dangling_vocab_reference_fails_resolution(self, tmp_path):
        config = IndexConfig(
            descriptor=DescriptorParams("bovw", vocab_ref="missing.bin"),
            extractor=ExtractorParams("dense-gradient"),
            distance_default="histogram-intersection",
        )
        path = tmp_path / "config.json"
        save_config(config, path)
        with pytest.raises(MalformedConfig):
            load_config(path)  # resolve=True is the default

    def test_vocab_dimension_mismatch_fails_resolution(self, tmp_path):
        save_codebook(make_codebook(k=5, d=48), tmp_path / "cb.bin")  # lab dims
        config = IndexConfig(
            descriptor=DescriptorParams("bovw", vocab_ref="cb.bin"),
            extractor=ExtractorParams("dense-gradient"),  # 128-d
            distance_default="histogram-intersection",
        )
        path = tmp_path / "config.json"
        save_config(config, path)
        with pytest.raises(MalformedConfig):
            load_config(path)

    def test_vocab_resolution_succeeds_with_matching_dims(self, tmp_path):
        save_codebook(make_codebook(k=5, d=128), tmp_path / "cb.bin")
        config = IndexConfig(
            descriptor=DescriptorParams("bovw", vocab_ref="cb.bin"),
            extractor=ExtractorParams("dense-gradient"),
            distance_default="histogram-intersection",
        )
        path = tmp_path / "config.json"
        save_config(config, path)
        assert load_config(path) == config

    def test_semantic_violations_rejected(self):
        with pytest.raises(Exception):
            IndexConfig(
                descriptor=DescriptorParams("hsv-hist", vocab_ref="cb.bin"),
                distance_default="euclidean",
            ).validate()
        with pytest.raises(Exception):
            IndexConfig(
                descriptor=DescriptorParams("bovw", vocab_ref="cb.bin"),
                extractor=ExtractorParams("dense-gradient"),
                weighting=WeightingParams("tfidf"),
                distance_default="euclidean",  # weighting requires normalization none
            ).validate()
