"""Fixed-length image representations.

Mid-level representations aggregate local features against a codebook
(bag of visual words and its binary, grid and pyramid variants, plus
VLAD); global descriptors work on the image directly (HSV histogram,
gradient-histogram miniature, Gabor bank statistics, color layout).

Images with no local features are described as zero vectors instead of
erroring, so corpus indexing never aborts on blank inputs; the event is
logged as a warning.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy import fft as scipy_fft
from scipy import ndimage

from .core import (
    BinaryDescriptorVector,
    DescriptorParams,
    DescriptorVector,
    ExtractorParams,
    ParamSpec,
    register_component,
)
from .errors import ConfigInvalid, DimensionMismatch, InvalidParameter
from .extract import LocalFeatureSet, extract_features, gradients, to_grayscale, validate_image
from .vocab import Codebook, assign_many

logger = logging.getLogger(__name__)

HSV_DEFAULT_BINS = (8, 4, 4)
HOG_DEFAULTS = {"miniSize": 64, "cells": 8, "bins": 9}
GABOR_DEFAULTS = {"scales": 3, "orientations": 4}


def _normalize(vector: np.ndarray, how: str) -> np.ndarray:
    if how == "none":
        return vector
    if how == "l1":
        total = np.abs(vector).sum()
    elif how == "l2":
        total = np.linalg.norm(vector)
    else:
        raise InvalidParameter(f"unknown normalization: {how!r}")
    return vector if total == 0.0 else vector / total


def _check_features(features: LocalFeatureSet, codebook: Codebook) -> None:
    if len(features) and features.dim != codebook.dim:
        raise DimensionMismatch(
            f"feature dimension {features.dim} vs codebook dimension {codebook.dim}"
        )


def _counts(features: LocalFeatureSet, codebook: Codebook) -> np.ndarray:
    _check_features(features, codebook)
    if len(features) == 0:
        logger.warning("empty feature set described as a zero vector")
        return np.zeros(codebook.k, dtype=np.float64)
    assignment = assign_many(features.descriptors, codebook)
    return np.bincount(assignment, minlength=codebook.k).astype(np.float64)


def describe_bovw(
    features: LocalFeatureSet, codebook: Codebook, normalization: str = "l2"
) -> DescriptorVector:
    """Histogram of nearest-centroid assignments, length k."""
    hist = _normalize(_counts(features, codebook), normalization)
    fid = f"bovw:{codebook.feature_id}:k{codebook.k}:{normalization}"
    return DescriptorVector(fid, hist)


def describe_binary_bovw(features: LocalFeatureSet, codebook: Codebook) -> BinaryDescriptorVector:
    """Bit i is set iff centroid i received at least one assignment."""
    bits = (_counts(features, codebook) > 0).astype(np.uint8)
    return BinaryDescriptorVector(f"binary-bovw:{codebook.feature_id}:k{codebook.k}", bits)


def _cell_of(coords: np.ndarray, width: int, height: int, cells: int) -> np.ndarray:
    """Row-major G x G cell index per keypoint (x, y)."""
    col = np.minimum((coords[:, 0] * cells // width).astype(np.int64), cells - 1)
    row = np.minimum((coords[:, 1] * cells // height).astype(np.int64), cells - 1)
    return row * cells + col


def describe_grid_bovw(
    width: int,
    height: int,
    features: LocalFeatureSet,
    codebook: Codebook,
    cells: int,
) -> DescriptorVector:
    """Per-cell histograms over a G x G partition, each L1 normalized.

    Cells without keypoints stay zero.  Output length is G^2 * k, cell
    blocks in row-major order.
    """
    if cells < 1:
        raise InvalidParameter("grid cells must be >= 1")
    _check_features(features, codebook)
    k = codebook.k
    out = np.zeros(cells * cells * k, dtype=np.float64)
    if len(features) == 0:
        logger.warning("empty feature set described as a zero vector")
    else:
        assignment = assign_many(features.descriptors, codebook)
        cell_idx = _cell_of(features.keypoints, width, height, cells)
        flat = cell_idx * k + assignment
        counts = np.bincount(flat, minlength=cells * cells * k).astype(np.float64)
        for c in range(cells * cells):
            block = counts[c * k : (c + 1) * k]
            out[c * k : (c + 1) * k] = _normalize(block, "l1")
    fid = f"grid-bovw:{codebook.feature_id}:k{k}:g{cells}"
    return DescriptorVector(fid, out)


def pyramid_level_weights(levels: int) -> tuple[float, ...]:
    """Level weights: 1/2^P for level 0, 1/2^(P-l+1) for levels l >= 1."""
    if levels < 1:
        raise InvalidParameter("pyramid levels must be >= 1")
    weights = [1.0 / 2.0**levels]
    weights.extend(1.0 / 2.0 ** (levels - l + 1) for l in range(1, levels))
    return tuple(weights)


def describe_spm_bovw(
    width: int,
    height: int,
    features: LocalFeatureSet,
    codebook: Codebook,
    levels: int,
    normalization: str = "none",
) -> DescriptorVector:
    """Spatial pyramid of raw count histograms, level-weighted.

    Level l partitions the image into 2^l x 2^l cells; cell histograms
    are scaled by the level weight and concatenated coarse-to-fine, for a
    total length of k * sum(4^l).  An optional overall normalization is
    applied last.
    """
    weights = pyramid_level_weights(levels)
    _check_features(features, codebook)
    k = codebook.k
    if len(features) == 0:
        logger.warning("empty feature set described as a zero vector")
        assignment = cell_coords = None
    else:
        assignment = assign_many(features.descriptors, codebook)
        cell_coords = features.keypoints

    parts = []
    for level, weight in enumerate(weights):
        cells = 2**level
        block = np.zeros(cells * cells * k, dtype=np.float64)
        if assignment is not None:
            cell_idx = _cell_of(cell_coords, width, height, cells)
            flat = cell_idx * k + assignment
            block = np.bincount(flat, minlength=cells * cells * k).astype(np.float64)
        parts.append(weight * block)
    out = _normalize(np.concatenate(parts), normalization)
    fid = f"spm-bovw:{codebook.feature_id}:k{k}:p{levels}:{normalization}"
    return DescriptorVector(fid, out)


def describe_vlad(features: LocalFeatureSet, codebook: Codebook) -> DescriptorVector:
    """Per-centroid residual sums, concatenated and globally L2 normalized.

    Output length is k * d.  No intra-normalization or power law is
    applied; a zero aggregate stays zero.
    """
    _check_features(features, codebook)
    k, d = codebook.k, codebook.dim
    agg = np.zeros((k, d), dtype=np.float64)
    if len(features) == 0:
        logger.warning("empty feature set described as a zero vector")
    else:
        assignment = assign_many(features.descriptors, codebook)
        residuals = features.descriptors - codebook.centroids[assignment]
        np.add.at(agg, assignment, residuals)
    out = _normalize(agg.ravel(), "l2")
    fid = f"vlad:{codebook.feature_id}:k{k}"
    return DescriptorVector(fid, out)


# ---------------------------------------------------------------------------
# Global descriptors
# ---------------------------------------------------------------------------

def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """Vectorized RGB -> HSV with all channels scaled to [0, 1]."""
    rgb = validate_image(image).astype(np.float64) / 255.0
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    maxc = rgb.max(axis=2)
    minc = rgb.min(axis=2)
    value = maxc
    span = maxc - minc
    sat = np.where(maxc > 0, span / np.where(maxc > 0, maxc, 1.0), 0.0)
    safe_span = np.where(span == 0, 1.0, span)
    rc = (maxc - r) / safe_span
    gc = (maxc - g) / safe_span
    bc = (maxc - b) / safe_span
    hue = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    hue = np.where(span == 0, 0.0, (hue / 6.0) % 1.0)
    return np.stack([hue, sat, value], axis=2)


def describe_hsv_histogram(
    image: np.ndarray, bins_h: int = 8, bins_s: int = 4, bins_v: int = 4
) -> DescriptorVector:
    """Joint 3-D HSV histogram, flattened H-major and L1 normalized."""
    if min(bins_h, bins_s, bins_v) < 1:
        raise InvalidParameter("histogram bins must be >= 1")
    hsv = rgb_to_hsv(image)
    h_idx = np.minimum((hsv[:, :, 0] * bins_h).astype(np.int64), bins_h - 1)
    s_idx = np.minimum((hsv[:, :, 1] * bins_s).astype(np.int64), bins_s - 1)
    v_idx = np.minimum((hsv[:, :, 2] * bins_v).astype(np.int64), bins_v - 1)
    flat = (h_idx * bins_s + s_idx) * bins_v + v_idx
    hist = np.bincount(flat.ravel(), minlength=bins_h * bins_s * bins_v).astype(np.float64)
    out = _normalize(hist, "l1")
    return DescriptorVector(f"hsv-hist:{bins_h}x{bins_s}x{bins_v}", out)


def resize_bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resampling with half-pixel centers."""
    in_h, in_w = plane.shape
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = np.clip(ys, 0, in_h - 1)
    xs = np.clip(xs, 0, in_w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = plane[np.ix_(y0, x0)] * (1 - wx) + plane[np.ix_(y0, x1)] * wx
    bottom = plane[np.ix_(y1, x0)] * (1 - wx) + plane[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bottom * wy


def describe_hog_miniature(
    image: np.ndarray, mini_size: int = 64, cells: int = 8, bins: int = 9
) -> DescriptorVector:
    """Orientation histograms of a bilinear-downscaled grayscale miniature.

    The miniature is split into cells x cells blocks; unsigned gradient
    orientations are accumulated into ``bins`` bins per block, and each
    block histogram is L2 normalized independently (zero blocks stay
    zero).  Output length is cells^2 * bins.
    """
    if mini_size < cells or mini_size % cells != 0:
        raise InvalidParameter("miniSize must be a positive multiple of cells")
    if bins < 1:
        raise InvalidParameter("bins must be >= 1")
    gray = resize_bilinear(to_grayscale(image), mini_size, mini_size)
    gx, gy = gradients(gray)
    magnitude = np.hypot(gx, gy)
    orientation = np.arctan2(gy, gx) % np.pi  # unsigned, [0, pi)
    bin_idx = np.minimum((orientation / (np.pi / bins)).astype(np.int64), bins - 1)

    cell_px = mini_size // cells
    rows = np.repeat(np.arange(mini_size) // cell_px, mini_size).reshape(mini_size, mini_size)
    cols = rows.T
    flat = (rows * cells + cols) * bins + bin_idx
    hist = np.bincount(
        flat.ravel(), weights=magnitude.ravel(), minlength=cells * cells * bins
    ).astype(np.float64)
    out = np.zeros_like(hist)
    for c in range(cells * cells):
        block = hist[c * bins : (c + 1) * bins]
        out[c * bins : (c + 1) * bins] = _normalize(block, "l2")
    return DescriptorVector(f"hog-mini:{mini_size}:{cells}:{bins}", out)


def gabor_kernel(scale: int, theta: float, base_sigma: float = 2.0, base_wavelength: float = 4.0):
    """Complex Gabor kernel; the even part is made DC free."""
    sigma = base_sigma * 2.0**scale
    wavelength = base_wavelength * 2.0**scale
    radius = int(np.ceil(3.0 * sigma))
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)
    rot = xs * np.cos(theta) + ys * np.sin(theta)
    envelope = np.exp(-(xs**2 + ys**2) / (2.0 * sigma**2))
    even = envelope * np.cos(2.0 * np.pi * rot / wavelength)
    odd = envelope * np.sin(2.0 * np.pi * rot / wavelength)
    even -= even.mean()
    odd -= odd.mean()
    return even, odd


def describe_gabor(image: np.ndarray, scales: int = 3, orientations: int = 4) -> DescriptorVector:
    """Mean and standard deviation of Gabor response magnitudes.

    One (mean, std) pair per (scale, orientation) filter, giving a
    vector of length 2 * scales * orientations.  Filters are DC free, so
    uniform images produce (numerically) zero statistics.
    """
    if scales < 1 or orientations < 1:
        raise InvalidParameter("scales and orientations must be >= 1")
    gray = to_grayscale(image) / 255.0
    stats = []
    for s in range(scales):
        for o in range(orientations):
            theta = o * np.pi / orientations
            even, odd = gabor_kernel(s, theta)
            re = ndimage.convolve(gray, even, mode="nearest")
            im = ndimage.convolve(gray, odd, mode="nearest")
            magnitude = np.hypot(re, im)
            stats.append(magnitude.mean())
            stats.append(magnitude.std())
    return DescriptorVector(
        f"gabor:{scales}x{orientations}", np.asarray(stats, dtype=np.float64)
    )


def _zigzag_order(size: int = 8) -> list[tuple[int, int]]:
    order: list[tuple[int, int]] = []
    for s in range(2 * size - 1):
        diagonal = [
            (i, s - i) for i in range(max(0, s - size + 1), min(s, size - 1) + 1)
        ]
        if s % 2 == 0:
            diagonal.reverse()
        order.extend(diagonal)
    return order


_ZIGZAG = _zigzag_order(8)


def _block_average(plane: np.ndarray, blocks: int = 8) -> np.ndarray:
    h, w = plane.shape
    ys = np.linspace(0, h, blocks + 1).astype(np.int64)
    xs = np.linspace(0, w, blocks + 1).astype(np.int64)
    out = np.empty((blocks, blocks), dtype=np.float64)
    for i in range(blocks):
        for j in range(blocks):
            out[i, j] = plane[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].mean()
    return out


def rgb_to_ycbcr(image: np.ndarray) -> np.ndarray:
    rgb = validate_image(image).astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=2)


def describe_color_layout(image: np.ndarray) -> DescriptorVector:
    """12-d layout descriptor: zigzag DCT coefficients of an 8x8 thumbnail.

    The image is block-averaged to 8x8 per Y/Cb/Cr channel and transformed
    with an orthonormal 2-D DCT; the first 6 Y, 3 Cb and 3 Cr zigzag
    coefficients are kept.
    """
    ycbcr = rgb_to_ycbcr(image)
    keep = {"y": 6, "cb": 3, "cr": 3}
    coeffs = []
    for channel, count in zip(range(3), keep.values()):
        thumb = _block_average(ycbcr[:, :, channel], 8)
        dct = scipy_fft.dctn(thumb, type=2, norm="ortho")
        coeffs.extend(dct[i, j] for i, j in _ZIGZAG[:count])
    return DescriptorVector("color-layout", np.asarray(coeffs, dtype=np.float64))


# ---------------------------------------------------------------------------
# Config-driven pipeline
# ---------------------------------------------------------------------------

def vector_length(params: DescriptorParams, codebook: Codebook | None) -> int:
    """Output dimensionality implied by a descriptor configuration."""
    rep = params.representation
    opts = params.option_dict()
    if rep in ("bovw", "binary-bovw"):
        return codebook.k
    if rep == "grid-bovw":
        return params.grid_cells**2 * codebook.k
    if rep == "spm-bovw":
        return codebook.k * sum(4**l for l in range(params.pyramid_levels))
    if rep == "vlad":
        return codebook.k * codebook.dim
    if rep == "hsv-hist":
        bins_h, bins_s, bins_v = (
            opts.get("binsH", HSV_DEFAULT_BINS[0]),
            opts.get("binsS", HSV_DEFAULT_BINS[1]),
            opts.get("binsV", HSV_DEFAULT_BINS[2]),
        )
        return bins_h * bins_s * bins_v
    if rep == "hog-mini":
        cells = opts.get("cells", HOG_DEFAULTS["cells"])
        bins = opts.get("bins", HOG_DEFAULTS["bins"])
        return cells**2 * bins
    if rep == "gabor":
        scales = opts.get("scales", GABOR_DEFAULTS["scales"])
        orients = opts.get("orientations", GABOR_DEFAULTS["orientations"])
        return 2 * scales * orients
    if rep == "color-layout":
        return 12
    raise InvalidParameter(f"unknown representation: {rep!r}")


class DescriptorModel:
    """Image -> raw representation pipeline bound to one configuration.

    The same model instance is used at index and query time so that a
    re-described image reproduces its stored vector exactly (weighting,
    when configured, is applied on top by the indexing and seeking
    layers).
    """

    def __init__(
        self,
        descriptor: DescriptorParams,
        extractor: ExtractorParams | None = None,
        codebook: Codebook | None = None,
    ) -> None:
        self.params = descriptor
        self.extractor = extractor
        self.codebook = codebook
        rep = descriptor.representation
        if rep in ("bovw", "binary-bovw", "grid-bovw", "spm-bovw", "vlad"):
            if codebook is None or extractor is None:
                raise ConfigInvalid(f"{rep} needs a codebook and extractor parameters")
            if codebook.feature_id and codebook.feature_id != extractor.feature:
                raise ConfigInvalid(
                    f"codebook trained on {codebook.feature_id!r}, "
                    f"extractor configured for {extractor.feature!r}"
                )
        self.length = vector_length(descriptor, codebook)

    @property
    def feature_id(self) -> str:
        rep = self.params.representation
        if self.extractor is not None:
            geo = f"{self.extractor.feature}:g{self.extractor.grid_step}p{self.extractor.patch_size}"
        opts = self.params.option_dict()
        if rep == "bovw":
            return f"bovw:{geo}:k{self.codebook.k}:{self.params.normalization}"
        if rep == "binary-bovw":
            return f"binary-bovw:{geo}:k{self.codebook.k}"
        if rep == "grid-bovw":
            return f"grid-bovw:{geo}:k{self.codebook.k}:g{self.params.grid_cells}"
        if rep == "spm-bovw":
            return (
                f"spm-bovw:{geo}:k{self.codebook.k}:p{self.params.pyramid_levels}"
                f":{self.params.normalization}"
            )
        if rep == "vlad":
            return f"vlad:{geo}:k{self.codebook.k}"
        if rep == "hsv-hist":
            b = (
                opts.get("binsH", HSV_DEFAULT_BINS[0]),
                opts.get("binsS", HSV_DEFAULT_BINS[1]),
                opts.get("binsV", HSV_DEFAULT_BINS[2]),
            )
            return f"hsv-hist:{b[0]}x{b[1]}x{b[2]}"
        if rep == "hog-mini":
            return (
                f"hog-mini:{opts.get('miniSize', HOG_DEFAULTS['miniSize'])}"
                f":{opts.get('cells', HOG_DEFAULTS['cells'])}"
                f":{opts.get('bins', HOG_DEFAULTS['bins'])}"
            )
        if rep == "gabor":
            return (
                f"gabor:{opts.get('scales', GABOR_DEFAULTS['scales'])}"
                f"x{opts.get('orientations', GABOR_DEFAULTS['orientations'])}"
            )
        return "color-layout"

    def _local_features(self, image: np.ndarray) -> LocalFeatureSet:
        return extract_features(
            self.extractor.feature,
            image,
            self.extractor.grid_step,
            self.extractor.patch_size,
        )

    def describe_image(self, image: np.ndarray) -> np.ndarray:
        """Raw (pre-weighting) representation of an image, float64."""
        image = validate_image(image)
        rep = self.params.representation
        opts = self.params.option_dict()
        height, width = image.shape[:2]
        if rep == "bovw":
            features = self._local_features(image)
            return describe_bovw(features, self.codebook, self.params.normalization).values
        if rep == "binary-bovw":
            features = self._local_features(image)
            return describe_binary_bovw(features, self.codebook).as_float()
        if rep == "grid-bovw":
            features = self._local_features(image)
            return describe_grid_bovw(
                width, height, features, self.codebook, self.params.grid_cells
            ).values
        if rep == "spm-bovw":
            features = self._local_features(image)
            return describe_spm_bovw(
                width,
                height,
                features,
                self.codebook,
                self.params.pyramid_levels,
                self.params.normalization,
            ).values
        if rep == "vlad":
            features = self._local_features(image)
            return describe_vlad(features, self.codebook).values
        if rep == "hsv-hist":
            return describe_hsv_histogram(
                image,
                opts.get("binsH", HSV_DEFAULT_BINS[0]),
                opts.get("binsS", HSV_DEFAULT_BINS[1]),
                opts.get("binsV", HSV_DEFAULT_BINS[2]),
            ).values
        if rep == "hog-mini":
            return describe_hog_miniature(
                image,
                opts.get("miniSize", HOG_DEFAULTS["miniSize"]),
                opts.get("cells", HOG_DEFAULTS["cells"]),
                opts.get("bins", HOG_DEFAULTS["bins"]),
            ).values
        if rep == "gabor":
            return describe_gabor(
                image,
                opts.get("scales", GABOR_DEFAULTS["scales"]),
                opts.get("orientations", GABOR_DEFAULTS["orientations"]),
            ).values
        if rep == "color-layout":
            return describe_color_layout(image).values
        raise InvalidParameter(f"unknown representation: {rep!r}")


# ---------------------------------------------------------------------------
# Registry entries
# ---------------------------------------------------------------------------

class _BoundDescriptor:
    """Registry instance exposing length and a describe() entry point."""

    def __init__(self, representation: str, **kwargs) -> None:
        self.representation = representation
        self.kwargs = kwargs
        vocab = kwargs.get("vocab")
        params = DescriptorParams(
            representation=representation,
            vocab_ref="bound" if vocab is not None else None,
            grid_cells=kwargs.get("gridCells"),
            pyramid_levels=kwargs.get("pyramidLevels"),
            normalization=kwargs.get("normalization", "l2"),
            options=tuple(
                sorted(
                    (key, int(value))
                    for key, value in kwargs.items()
                    if key in ("binsH", "binsS", "binsV", "miniSize", "cells", "bins",
                               "scales", "orientations")
                    and value is not None
                )
            ),
        )
        self.length = vector_length(params, vocab)
        self._params = params
        self._vocab = vocab

    def describe(
        self,
        features: LocalFeatureSet | None = None,
        image: np.ndarray | None = None,
        width: int | None = None,
        height: int | None = None,
    ):
        rep = self.representation
        opts = self._params.option_dict()
        if rep == "bovw":
            return describe_bovw(features, self._vocab, self._params.normalization)
        if rep == "binary-bovw":
            return describe_binary_bovw(features, self._vocab)
        if rep == "grid-bovw":
            return describe_grid_bovw(width, height, features, self._vocab, self._params.grid_cells)
        if rep == "spm-bovw":
            return describe_spm_bovw(
                width, height, features, self._vocab,
                self._params.pyramid_levels, self._params.normalization,
            )
        if rep == "vlad":
            return describe_vlad(features, self._vocab)
        if rep == "hsv-hist":
            return describe_hsv_histogram(
                image,
                opts.get("binsH", HSV_DEFAULT_BINS[0]),
                opts.get("binsS", HSV_DEFAULT_BINS[1]),
                opts.get("binsV", HSV_DEFAULT_BINS[2]),
            )
        if rep == "hog-mini":
            return describe_hog_miniature(
                image,
                opts.get("miniSize", HOG_DEFAULTS["miniSize"]),
                opts.get("cells", HOG_DEFAULTS["cells"]),
                opts.get("bins", HOG_DEFAULTS["bins"]),
            )
        if rep == "gabor":
            return describe_gabor(
                image,
                opts.get("scales", GABOR_DEFAULTS["scales"]),
                opts.get("orientations", GABOR_DEFAULTS["orientations"]),
            )
        return describe_color_layout(image)


def _register() -> None:
    vocab_spec = {"vocab": ParamSpec((Codebook,))}
    norm_spec = {"normalization": ParamSpec((str,), "l2", lambda v: v in ("none", "l1", "l2"))}
    positive = lambda v: v >= 1  # noqa: E731

    register_component(
        "descriptor", "bovw",
        lambda vocab, normalization: _BoundDescriptor("bovw", vocab=vocab, normalization=normalization),
        {**vocab_spec, **norm_spec},
    )
    register_component(
        "descriptor", "binary-bovw",
        lambda vocab: _BoundDescriptor("binary-bovw", vocab=vocab),
        vocab_spec,
    )
    register_component(
        "descriptor", "grid-bovw",
        lambda vocab, gridCells: _BoundDescriptor("grid-bovw", vocab=vocab, gridCells=gridCells),
        {**vocab_spec, "gridCells": ParamSpec((int,), 2, positive)},
    )
    register_component(
        "descriptor", "spm-bovw",
        lambda vocab, pyramidLevels, normalization: _BoundDescriptor(
            "spm-bovw", vocab=vocab, pyramidLevels=pyramidLevels, normalization=normalization
        ),
        {**vocab_spec, "pyramidLevels": ParamSpec((int,), 2, positive),
         "normalization": ParamSpec((str,), "none", lambda v: v in ("none", "l1", "l2"))},
    )
    register_component(
        "descriptor", "vlad",
        lambda vocab: _BoundDescriptor("vlad", vocab=vocab),
        vocab_spec,
    )
    register_component(
        "descriptor", "hsv-hist",
        lambda binsH, binsS, binsV: _BoundDescriptor(
            "hsv-hist", binsH=binsH, binsS=binsS, binsV=binsV
        ),
        {"binsH": ParamSpec((int,), 8, positive),
         "binsS": ParamSpec((int,), 4, positive),
         "binsV": ParamSpec((int,), 4, positive)},
    )
    register_component(
        "descriptor", "hog-mini",
        lambda miniSize, cells, bins: _BoundDescriptor(
            "hog-mini", miniSize=miniSize, cells=cells, bins=bins
        ),
        {"miniSize": ParamSpec((int,), 64, positive),
         "cells": ParamSpec((int,), 8, positive),
         "bins": ParamSpec((int,), 9, positive)},
    )
    register_component(
        "descriptor", "gabor",
        lambda scales, orientations: _BoundDescriptor(
            "gabor", scales=scales, orientations=orientations
        ),
        {"scales": ParamSpec((int,), 3, positive),
         "orientations": ParamSpec((int,), 4, positive)},
    )
    register_component(
        "descriptor", "color-layout", lambda: _BoundDescriptor("color-layout"), {}
    )


_register()
