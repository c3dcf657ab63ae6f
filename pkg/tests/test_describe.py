"""Mid-level and global descriptors against independent oracles."""
import numpy as np
import pytest

from imsearch.describe import (
    describe_binary_bovw,
    describe_bovw,
    describe_color_layout,
    describe_gabor,
    describe_grid_bovw,
    describe_hog_miniature,
    describe_hsv_histogram,
    describe_spm_bovw,
    describe_vlad,
    pyramid_level_weights,
    resize_bilinear,
)
from imsearch.errors import DimensionMismatch
from imsearch.extract import LocalFeatureSet
from imsearch.vocab import Codebook, assign

from conftest import uniform_image, random_image


def feature_set(keypoints, descriptors) -> LocalFeatureSet:
    return LocalFeatureSet("f", np.asarray(keypoints, dtype=float), np.asarray(descriptors, dtype=float))


def random_features(rng, n=40, d=4, width=64, height=64) -> LocalFeatureSet:
    xy = rng.uniform(0, [width, height], size=(n, 2))
    keypoints = np.column_stack([xy, np.full(n, 16.0)])
    return LocalFeatureSet("f", keypoints, rng.normal(size=(n, d)))


@pytest.fixture
def codebook(rng):
    return Codebook(rng.normal(size=(5, 4)), "f", 0)


class TestBoVW:
    def test_all_features_on_one_centroid(self):
        cb = Codebook(np.array([[0.0], [10.0], [20.0], [30.0]]), "f", 0)
        feats = feature_set([(1, 1, 1)] * 3, [[0.1], [0.2], [0.1]])
        out = describe_bovw(feats, cb, "l1")
        assert np.allclose(out.values, [1, 0, 0, 0], atol=0)

    def test_empty_feature_set_yields_zero_vector(self, codebook):
        feats = LocalFeatureSet("f", np.zeros((0, 3)), np.zeros((0, 4)))
        out = describe_bovw(feats, codebook)
        assert out.length == codebook.k
        assert np.all(out.values == 0.0)

    def test_matches_assignment_loop_oracle(self, rng, codebook):
        feats = random_features(rng, n=60)
        counts = np.zeros(codebook.k)
        for descriptor in feats.descriptors:
            counts[assign(descriptor, codebook)] += 1
        expected = counts / np.linalg.norm(counts)
        out = describe_bovw(feats, codebook, "l2")
        assert np.allclose(out.values, expected, atol=1e-12)

    def test_permutation_invariance(self, rng, codebook):
        feats = random_features(rng, n=30)
        perm = rng.permutation(30)
        shuffled = LocalFeatureSet("f", feats.keypoints[perm], feats.descriptors[perm])
        a = describe_bovw(feats, codebook).values
        b = describe_bovw(shuffled, codebook).values
        assert np.array_equal(a, b)

    def test_norm_contract(self, rng, codebook):
        feats = random_features(rng, n=25)
        l2 = describe_bovw(feats, codebook, "l2").values
        l1 = describe_bovw(feats, codebook, "l1").values
        assert abs(np.linalg.norm(l2) - 1.0) < 1e-9
        assert abs(np.abs(l1).sum() - 1.0) < 1e-9

    def test_dimension_mismatch(self, codebook):
        feats = feature_set([(1, 1, 1)], [[0.1, 0.2]])
        with pytest.raises(DimensionMismatch):
            describe_bovw(feats, codebook)


class TestBinaryBoVW:
    def test_histogram_3010_gives_bits_1010(self):
        cb = Codebook(np.array([[0.0], [10.0], [20.0], [30.0]]), "f", 0)
        feats = feature_set([(1, 1, 1)] * 4, [[0.0], [0.5], [-0.5], [20.1]])
        out = describe_binary_bovw(feats, cb)
        assert out.bits.tolist() == [1, 0, 1, 0]

    def test_empty_features_all_zero(self, codebook):
        feats = LocalFeatureSet("f", np.zeros((0, 3)), np.zeros((0, 4)))
        assert describe_binary_bovw(feats, codebook).popcount() == 0

    def test_popcount_bound(self, rng, codebook):
        for n in (1, 3, 8, 50):
            feats = random_features(rng, n=n)
            out = describe_binary_bovw(feats, codebook)
            assert out.popcount() <= min(codebook.k, n)


class TestGridBoVW:
    def test_single_cell_equals_plain_bovw_l1(self, rng, codebook):
        feats = random_features(rng, n=20)
        grid = describe_grid_bovw(64, 64, feats, codebook, cells=1)
        plain = describe_bovw(feats, codebook, "l1")
        assert np.allclose(grid.values, plain.values, atol=0)

    def test_all_keypoints_in_top_left_cell(self, rng, codebook):
        n = 10
        keypoints = np.column_stack(
            [rng.uniform(0, 31, size=n), rng.uniform(0, 31, size=n), np.full(n, 16.0)]
        )
        feats = LocalFeatureSet("f", keypoints, rng.normal(size=(n, 4)))
        out = describe_grid_bovw(64, 64, feats, codebook, cells=2)
        k = codebook.k
        assert np.any(out.values[:k] > 0)
        assert np.all(out.values[k:] == 0.0)

    def test_matches_partition_oracle(self, rng, codebook):
        feats = random_features(rng, n=80, width=60, height=40)
        cells = 3
        out = describe_grid_bovw(60, 40, feats, codebook, cells)
        expected = np.zeros(cells * cells * codebook.k)
        for (x, y, _), descriptor in zip(feats.keypoints, feats.descriptors):
            col = min(int(x * cells // 60), cells - 1)
            row = min(int(y * cells // 40), cells - 1)
            cell = row * cells + col
            expected[cell * codebook.k + assign(descriptor, codebook)] += 1
        for cell in range(cells * cells):
            block = expected[cell * codebook.k : (cell + 1) * codebook.k]
            total = block.sum()
            if total:
                block /= total
        assert np.allclose(out.values, expected, atol=1e-12)


class TestSpmBoVW:
    def test_level_weights(self):
        assert pyramid_level_weights(1) == (0.5,)
        assert pyramid_level_weights(2) == (0.25, 0.25)
        assert pyramid_level_weights(3) == (0.125, 0.125, 0.25)

    def test_single_level_is_weighted_bovw(self, rng, codebook):
        feats = random_features(rng, n=20)
        spm = describe_spm_bovw(64, 64, feats, codebook, levels=1)
        plain = describe_bovw(feats, codebook, "none")
        assert np.allclose(spm.values, 0.5 * plain.values, atol=0)

    def test_output_length(self, rng):
        cb = Codebook(rng.normal(size=(10, 4)), "f", 0)
        feats = random_features(rng, n=15)
        out = describe_spm_bovw(64, 64, feats, cb, levels=2)
        assert out.length == 10 * (1 + 4)

    def test_matches_straight_line_oracle(self, rng, codebook):
        width, height, levels = 60, 44, 3
        feats = random_features(rng, n=70, width=width, height=height)
        out = describe_spm_bovw(width, height, feats, codebook, levels)

        weights = [1.0 / 2.0**levels] + [
            1.0 / 2.0 ** (levels - l + 1) for l in range(1, levels)
        ]
        parts = []
        for level in range(levels):
            cells = 2**level
            hist = np.zeros(cells * cells * codebook.k)
            for (x, y, _), descriptor in zip(feats.keypoints, feats.descriptors):
                col = min(int(x * cells // width), cells - 1)
                row = min(int(y * cells // height), cells - 1)
                cell = row * cells + col
                hist[cell * codebook.k + assign(descriptor, codebook)] += 1
            parts.append(weights[level] * hist)
        expected = np.concatenate(parts)
        assert np.allclose(out.values, expected, atol=1e-12)


class TestVlad:
    def test_features_equal_centroids_give_zero(self, codebook):
        feats = LocalFeatureSet(
            "f", np.zeros((codebook.k, 3)), codebook.centroids.copy()
        )
        out = describe_vlad(feats, codebook)
        assert np.all(out.values == 0.0)

    def test_hand_computed_two_by_two(self):
        cb = Codebook(np.array([[0.0, 0.0], [10.0, 10.0]]), "f", 0)
        feats = feature_set([(1, 1, 1), (2, 2, 1)], [[1.0, 2.0], [11.0, 9.0]])
        raw = np.array([1.0, 2.0, 1.0, -1.0])  # residuals per centroid
        expected = raw / np.linalg.norm(raw)
        out = describe_vlad(feats, cb)
        assert np.allclose(out.values, expected, atol=1e-12)

    def test_output_length_k_times_d(self, rng):
        cb = Codebook(rng.normal(size=(6, 4)), "f", 0)
        feats = random_features(rng, n=30)
        assert describe_vlad(feats, cb).length == 6 * 4


class TestHsvHistogram:
    def test_pure_red_single_bin(self):
        image = np.zeros((16, 16, 3), dtype=np.uint8)
        image[:, :, 0] = 255
        out = describe_hsv_histogram(image, 8, 4, 4)
        nonzero = np.flatnonzero(out.values)
        assert len(nonzero) == 1
        assert out.values[nonzero[0]] == 1.0
        # red: hue 0, full saturation and value -> bin (0, 3, 3)
        assert nonzero[0] == (0 * 4 + 3) * 4 + 3

    def test_l1_normalized(self, rng):
        out = describe_hsv_histogram(random_image(rng), 8, 4, 4)
        assert abs(out.values.sum() - 1.0) < 1e-9
        assert out.length == 128

    def test_two_color_halves(self):
        image = np.zeros((16, 16, 3), dtype=np.uint8)
        image[:, :8, 0] = 255   # left pure red
        image[:, 8:, 2] = 255   # right pure blue
        out = describe_hsv_histogram(image, 8, 4, 4)
        values = sorted(out.values[np.flatnonzero(out.values)])
        assert values == [0.5, 0.5]


class TestHogMiniature:
    def test_uniform_image_zero(self):
        out = describe_hog_miniature(uniform_image(90, 64), 32, 4, 9)
        assert np.all(out.values == 0.0)

    def test_length(self, rng):
        out = describe_hog_miniature(random_image(rng, 48), 32, 4, 9)
        assert out.length == 4 * 4 * 9

    def test_rotation_moves_mass_between_orthogonal_bins(self):
        stripes = np.zeros((64, 64, 3), dtype=np.uint8)
        rows = (np.arange(64) // 4) % 2 == 0
        stripes[rows, :, :] = 255  # horizontal stripes: gradient along y
        rotated = np.rot90(stripes, axes=(0, 1)).copy()
        bins = 8
        a = describe_hog_miniature(stripes, 32, 4, bins).values.reshape(-1, bins).sum(axis=0)
        b = describe_hog_miniature(rotated, 32, 4, bins).values.reshape(-1, bins).sum(axis=0)
        # unsigned orientations: gradient along y -> pi/2 (bin 4), along x -> 0 (bin 0)
        assert int(np.argmax(a)) == bins // 2
        assert int(np.argmax(b)) == 0

    def test_resize_identity(self, rng):
        plane = rng.uniform(0, 255, size=(16, 16))
        assert np.allclose(resize_bilinear(plane, 16, 16), plane, atol=1e-9)


class TestGabor:
    def test_uniform_image_near_zero(self):
        out = describe_gabor(uniform_image(77, 48), scales=2, orientations=4)
        assert np.all(np.abs(out.values) < 1e-9)

    def test_length(self, rng):
        out = describe_gabor(random_image(rng, 32), scales=2, orientations=3)
        assert out.length == 2 * 2 * 3

    def test_grating_dominates_tuned_orientation(self):
        size = 48
        xs = np.arange(size)
        wave = 0.5 + 0.5 * np.sin(2 * np.pi * xs / 4.0)  # tuned to scale-0 wavelength
        image = np.clip(np.tile(wave[None, :, None], (size, 1, 3)) * 255, 0, 255).astype(np.uint8)
        orientations = 4
        out = describe_gabor(image, scales=1, orientations=orientations).values
        means = out[0::2]
        # variation along x matches the theta = 0 carrier
        assert int(np.argmax(means)) == 0


class TestColorLayout:
    def test_uniform_gray_only_dc(self):
        out = describe_color_layout(uniform_image(119, 32))
        values = out.values
        # layout: 6 Y coefficients, 3 Cb, 3 Cr; DC is first of each block
        assert np.all(np.abs(values[1:6]) < 1e-9)
        assert np.all(np.abs(values[7:9]) < 1e-9)
        assert np.all(np.abs(values[10:12]) < 1e-9)
        assert abs(values[0]) > 0

    def test_length_12(self, rng):
        assert describe_color_layout(random_image(rng)).length == 12

    def test_left_right_split_dominant_first_horizontal_ac(self):
        image = np.zeros((32, 32, 3), dtype=np.uint8)
        image[:, 16:, :] = 255
        values = describe_color_layout(image).values
        y_ac = np.abs(values[1:6])
        assert int(np.argmax(y_ac)) == 0  # zigzag position 1 = first horizontal AC
        assert y_ac[0] > 10.0
