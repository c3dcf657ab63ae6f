"""Local features and global descriptors on synthetic images.

Walks through the feature bank: dense gradient-histogram patches, the
root transform, Lab color patches, and the four global descriptors.
"""
import numpy as np

from imsearch.describe import (
    describe_color_layout,
    describe_gabor,
    describe_hog_miniature,
    describe_hsv_histogram,
)
from imsearch.extract import (
    extract_dense_gradient,
    extract_lab_patches,
    to_root_descriptors,
)


def checkerboard(size=64, period=8):
    xs = np.arange(size)
    mask = (((xs[:, None] // period) + (xs[None, :] // period)) % 2).astype(np.uint8)
    image = np.zeros((size, size, 3), dtype=np.uint8)
    image[mask == 1] = (220, 80, 40)
    image[mask == 0] = (30, 60, 200)
    return image


def main():
    image = checkerboard()
    print(f"input image: {image.shape[1]}x{image.shape[0]} RGB")

    features = extract_dense_gradient(image, grid_step=8, patch_size=16)
    print(f"\ndense gradient features: {len(features)} keypoints, "
          f"{features.dim}-d descriptors")
    print("  first keypoint (x, y, scale):", features.keypoints[0])
    print("  descriptor L2 norms ~ 1:", np.linalg.norm(features.descriptors[:3], axis=1))

    rooted = to_root_descriptors(features)
    print(f"\nroot-transformed variant: norms stay unit "
          f"({np.linalg.norm(rooted.descriptors[0]):.6f})")

    lab = extract_lab_patches(image, grid_step=8, patch_size=16)
    print(f"\nLab patches: {len(lab)} keypoints, {lab.dim}-d "
          f"(16 L means, 16 a, 16 b)")

    hsv = describe_hsv_histogram(image)
    print(f"\nHSV histogram: length {hsv.length}, sums to {hsv.values.sum():.3f}, "
          f"{np.count_nonzero(hsv.values)} non-empty bins")

    hog = describe_hog_miniature(image)
    print(f"gradient miniature: length {hog.length}")

    gabor = describe_gabor(image)
    print(f"filter-bank statistics: length {gabor.length} "
          f"(mean+std per scale/orientation)")

    layout = describe_color_layout(image)
    print(f"color layout: length {layout.length}, coefficients {np.round(layout.values, 1)}")


if __name__ == "__main__":
    main()
