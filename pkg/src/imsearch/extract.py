"""Local feature extraction over dense sampling grids.

Images are numpy arrays of shape (height, width, 3), dtype uint8, RGB.
Keypoints are sampled on a regular grid with the patch fully inside the
image; extraction is deterministic, so the descriptor count depends only
on the image geometry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParamSpec, register_component
from .errors import ImageTooSmall, InvalidParameter, NegativeComponent

GRADIENT_DIM = 128  # 4x4 spatial cells x 8 orientation bins
LAB_DIM = 48        # 4x4 subregions x mean L, a, b

FEATURE_DIMS = {
    "dense-gradient": GRADIENT_DIM,
    "dense-gradient-root": GRADIENT_DIM,
    "lab": LAB_DIM,
}

_CLIP = 0.2  # gradient descriptor component cap before renormalization


@dataclass(frozen=True, eq=False)
class LocalFeatureSet:
    """Parallel arrays of keypoints (x, y, scale) and their descriptors."""

    feature_id: str
    keypoints: np.ndarray   # (n, 3) float64
    descriptors: np.ndarray  # (n, d) float64

    def __post_init__(self) -> None:
        kp = np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)
        desc = np.asarray(self.descriptors, dtype=np.float64)
        if desc.ndim != 2 or desc.shape[0] != kp.shape[0]:
            raise InvalidParameter("keypoints and descriptors must be parallel")
        kp.flags.writeable = False
        desc.flags.writeable = False
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "descriptors", desc)

    def __len__(self) -> int:
        return int(self.keypoints.shape[0])

    @property
    def dim(self) -> int:
        return int(self.descriptors.shape[1])


def validate_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise InvalidParameter("image must have shape (height, width, 3)")
    if image.dtype != np.uint8:
        raise InvalidParameter("image must be 8-bit per channel")
    return image


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luminance Y = 0.299 R + 0.587 G + 0.114 B, float64."""
    image = validate_image(image)
    rgb = image.astype(np.float64)
    return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]


def gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences with replicate padding at the borders."""
    padded = np.pad(gray, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def _check_patch_params(grid_step: int, patch_size: int) -> None:
    if patch_size < 8 or patch_size % 2 != 0:
        raise InvalidParameter("patchSize must be even and >= 8")
    if grid_step < 1:
        raise InvalidParameter("gridStep must be >= 1")


def grid_centers(width: int, height: int, grid_step: int, patch_size: int) -> np.ndarray:
    """Grid of (x, y) patch centers with the patch fully inside the image."""
    half = patch_size // 2
    xs = np.arange(half, width - half + 1, grid_step)
    ys = np.arange(half, height - half + 1, grid_step)
    if xs.size == 0 or ys.size == 0:
        raise ImageTooSmall(
            f"image {width}x{height} cannot fit a {patch_size}-pixel patch"
        )
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def extract_dense_gradient(
    image: np.ndarray, grid_step: int = 8, patch_size: int = 16
) -> LocalFeatureSet:
    """128-d gradient orientation histograms on a dense grid.

    Each patch is split into 4x4 spatial cells; gradient magnitudes are
    accumulated into 8 orientation bins per cell.  Descriptors are L2
    normalized, clipped at 0.2 and renormalized; all-zero patches stay
    zero.
    """
    _check_patch_params(grid_step, patch_size)
    gray = to_grayscale(image)
    height, width = gray.shape
    centers = grid_centers(width, height, grid_step, patch_size)

    gx, gy = gradients(gray)
    magnitude = np.hypot(gx, gy)
    orientation = np.arctan2(gy, gx)  # [-pi, pi]
    bins = np.floor((orientation + np.pi) / (2 * np.pi / 8)).astype(np.int64) % 8

    half = patch_size // 2
    cell = patch_size // 4
    descriptors = np.zeros((len(centers), GRADIENT_DIM), dtype=np.float64)
    for idx, (cx, cy) in enumerate(centers):
        sl = (slice(cy - half, cy + half), slice(cx - half, cx + half))
        patch_mag = magnitude[sl]
        patch_bin = bins[sl]
        rows = np.repeat(np.arange(patch_size) // cell, patch_size)
        cols = np.tile(np.arange(patch_size) // cell, patch_size)
        flat = (rows * 4 + cols) * 8 + patch_bin.ravel()
        hist = np.bincount(flat, weights=patch_mag.ravel(), minlength=GRADIENT_DIM)
        descriptors[idx] = _normalize_clip(hist)

    keypoints = np.column_stack(
        [centers[:, 0], centers[:, 1], np.full(len(centers), float(patch_size))]
    )
    return LocalFeatureSet("dense-gradient", keypoints, descriptors)


def _normalize_clip(vector: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm == 0.0:
        return vector
    vector = np.minimum(vector / norm, _CLIP)
    norm = np.linalg.norm(vector)
    return vector if norm == 0.0 else vector / norm


def to_root_descriptors(features: LocalFeatureSet) -> LocalFeatureSet:
    """L1 normalize then take the element-wise square root.

    Non-zero outputs are L2 unit vectors; the zero vector maps to itself.
    Requires non-negative inputs.
    """
    desc = features.descriptors
    if np.any(desc < 0):
        raise NegativeComponent("root transform requires non-negative descriptors")
    sums = desc.sum(axis=1, keepdims=True)
    safe = np.where(sums == 0.0, 1.0, sums)
    rooted = np.sqrt(desc / safe)
    return LocalFeatureSet(features.feature_id + "-root", features.keypoints, rooted)


def extract_dense_gradient_root(
    image: np.ndarray, grid_step: int = 8, patch_size: int = 16
) -> LocalFeatureSet:
    return to_root_descriptors(extract_dense_gradient(image, grid_step, patch_size))


# sRGB -> CIE Lab, D65 white point
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65 = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(image: np.ndarray) -> np.ndarray:
    """Convert an RGB uint8 image to Lab planes, shape (h, w, 3) float64."""
    rgb = validate_image(image).astype(np.float64) / 255.0
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    ratio = xyz / _D65
    eps = (6.0 / 29.0) ** 3
    f = np.where(ratio > eps, np.cbrt(ratio), ratio / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[:, :, 0] = 116.0 * f[:, :, 1] - 16.0
    lab[:, :, 1] = 500.0 * (f[:, :, 0] - f[:, :, 1])
    lab[:, :, 2] = 200.0 * (f[:, :, 1] - f[:, :, 2])
    return lab


def extract_lab_patches(
    image: np.ndarray, grid_step: int = 8, patch_size: int = 16
) -> LocalFeatureSet:
    """48-d color patch descriptor: mean L, a, b over 4x4 subregions.

    Layout is channel-planar: 16 L means, then 16 a means, then 16 b
    means, subregions in row-major order.
    """
    _check_patch_params(grid_step, patch_size)
    image = validate_image(image)
    height, width = image.shape[:2]
    centers = grid_centers(width, height, grid_step, patch_size)
    lab = rgb_to_lab(image)

    half = patch_size // 2
    cell = patch_size // 4
    descriptors = np.zeros((len(centers), LAB_DIM), dtype=np.float64)
    for idx, (cx, cy) in enumerate(centers):
        patch = lab[cy - half : cy + half, cx - half : cx + half]
        blocks = patch.reshape(4, cell, 4, cell, 3).mean(axis=(1, 3))  # (4, 4, 3)
        descriptors[idx] = blocks.reshape(16, 3).T.ravel()

    keypoints = np.column_stack(
        [centers[:, 0], centers[:, 1], np.full(len(centers), float(patch_size))]
    )
    return LocalFeatureSet("lab", keypoints, descriptors)


_EXTRACTORS = {
    "dense-gradient": extract_dense_gradient,
    "dense-gradient-root": extract_dense_gradient_root,
    "lab": extract_lab_patches,
}


def extract_features(
    feature: str, image: np.ndarray, grid_step: int = 8, patch_size: int = 16
) -> LocalFeatureSet:
    try:
        fn = _EXTRACTORS[feature]
    except KeyError:
        raise InvalidParameter(f"unknown local feature: {feature!r}") from None
    return fn(image, grid_step, patch_size)


class _BoundExtractor:
    """Extractor instance with grid geometry fixed at selection time."""

    def __init__(self, feature: str, grid_step: int, patch_size: int) -> None:
        _check_patch_params(grid_step, patch_size)
        self.feature = feature
        self.grid_step = grid_step
        self.patch_size = patch_size

    @property
    def dim(self) -> int:
        return FEATURE_DIMS[self.feature]

    def extract(self, image: np.ndarray) -> LocalFeatureSet:
        return extract_features(self.feature, image, self.grid_step, self.patch_size)

    __call__ = extract


def _register() -> None:
    params = {
        "gridStep": ParamSpec((int,), 8, lambda v: v >= 1),
        "patchSize": ParamSpec((int,), 16, lambda v: v >= 8 and v % 2 == 0),
    }
    for name in _EXTRACTORS:
        register_component(
            "extractor",
            name,
            lambda gridStep, patchSize, _n=name: _BoundExtractor(_n, gridStep, patchSize),
            params,
        )


_register()
