"""Visual vocabularies and bag-of-visual-words representations.

Trains a k-means codebook on dense local features and compares the
plain, binary, grid, pyramid and VLAD aggregations of one image.
"""
import tempfile
from pathlib import Path

import numpy as np

from imsearch.corpus import generate_corpus
from imsearch.describe import (
    describe_binary_bovw,
    describe_bovw,
    describe_grid_bovw,
    describe_spm_bovw,
    describe_vlad,
)
from imsearch.extract import extract_dense_gradient
from imsearch.indexing import load_image
from imsearch.vocab import load_codebook, save_codebook, train_kmeans


def main():
    workspace = Path(tempfile.mkdtemp(prefix="imsearch-demo-"))
    corpus = generate_corpus(workspace / "imgs", classes=4, per_class=6, size=48, seed=4)
    print(f"corpus: {len(corpus.records)} images in {workspace / 'imgs'}")

    blocks = []
    for record in corpus.records:
        feats = extract_dense_gradient(load_image(record.uri), 8, 16)
        blocks.append(feats.descriptors)
    samples = np.vstack(blocks)
    print(f"training samples: {samples.shape[0]} x {samples.shape[1]}")

    codebook = train_kmeans(samples, k=12, seed=7, feature_id="dense-gradient")
    save_codebook(codebook, workspace / "codebook.bin")
    reloaded = load_codebook(workspace / "codebook.bin")
    print(f"codebook: k={reloaded.k}, d={reloaded.dim}, "
          f"persisted+reloaded identically: "
          f"{np.array_equal(codebook.centroids.astype(np.float32), reloaded.centroids.astype(np.float32))}")

    image = load_image(corpus.records[0].uri)
    feats = extract_dense_gradient(image, 8, 16)
    width, height = image.shape[1], image.shape[0]

    bovw = describe_bovw(feats, reloaded)
    print(f"\nbovw        : length {bovw.length}, l2 norm {np.linalg.norm(bovw.values):.3f}")
    binary = describe_binary_bovw(feats, reloaded)
    print(f"binary bovw : length {binary.length}, {binary.popcount()} bits set")
    grid = describe_grid_bovw(width, height, feats, reloaded, cells=2)
    print(f"grid bovw   : length {grid.length} (2x2 cells, per-cell L1)")
    spm = describe_spm_bovw(width, height, feats, reloaded, levels=2)
    print(f"pyramid bovw: length {spm.length} (levels 1x1 + 2x2, level-weighted)")
    vlad = describe_vlad(feats, reloaded)
    print(f"vlad        : length {vlad.length} (k*d residual sums, global L2)")


if __name__ == "__main__":
    main()
